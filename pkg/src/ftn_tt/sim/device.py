"""Core grid with reader/compute/writer engines and a cooperative scheduler.

Schedule: sweep cores in ascending id; on each core run reader, compute,
writer in that order, each until it blocks or finishes. A sweep in which no
engine executes an op while some are still blocked is a deadlock.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from ..config import DeviceConfig
from ..dialects import KERNEL_KINDS
from ..ir.core import Block, DiagnosticError, Function, Operation, error, location_of
from .cb import CircularBuffer, ProtocolError
from .interp import PURE_OPS
from .tiles import exec_compute_op


class DeviceError(DiagnosticError):
    pass


@dataclass(frozen=True)
class BlockedOn:
    cb: int
    need: int
    kind: str  # space | data


@dataclass(frozen=True)
class DeadlockEntry:
    core: int
    engine: str
    op: str
    cb: int
    need: int
    kind: str

    def __str__(self) -> str:
        return f"core {self.core} {self.engine} blocked in {self.op} on cb {self.cb}: needs {self.need} tile(s) of {self.kind}"


@dataclass
class DeadlockReport:
    step: int
    blocked: list[DeadlockEntry]

    @property
    def cbs(self) -> set[tuple[int, int]]:
        return {(e.core, e.cb) for e in self.blocked}

    def __str__(self) -> str:
        return "\n".join([f"deadlock after {self.step} steps:"] + [f"  {e}" for e in self.blocked])


class DeadlockError(Exception):
    def __init__(self, report: DeadlockReport):
        self.report = report
        super().__init__(str(report))


class StepBudgetExceeded(Exception):
    def __init__(self, steps: int, summary: str):
        self.steps = steps
        self.summary = summary
        super().__init__(f"step budget of {steps} exceeded\n{summary}")


@dataclass
class EngineState:
    kind: str
    program: Function | None
    args: list = field(default_factory=list)
    status: str = "runnable"  # runnable | blocked | done
    blocked_on: BlockedOn | None = None
    current: Operation | None = None
    gen: Iterator | None = None


@dataclass
class CoreState:
    id: int
    cbs: dict[int, CircularBuffer] = field(default_factory=dict)
    kernels: dict[str, Function] = field(default_factory=dict)
    args: dict[str, list] = field(default_factory=dict)
    engines: list[EngineState] = field(default_factory=list)


@dataclass
class DeviceState:
    cfg: DeviceConfig
    cores: dict[int, CoreState] = field(default_factory=dict)
    dram: dict[int, np.ndarray] = field(default_factory=dict)  # buffer id -> uint8 bytes
    steps: int = 0
    trace: list[str] | None = None

    def core(self, c: int) -> CoreState:
        if not 0 <= c < self.cfg.num_cores:
            raise DeviceError(error(f"core {c} does not exist on a {self.cfg.num_cores}-core device"))
        return self.cores.setdefault(c, CoreState(c))


def _f32_view(buf: np.ndarray) -> np.ndarray:
    return buf[: buf.shape[0] // 4 * 4].view("<f4")


class _Engine:
    """Interprets one device function as a generator.

    Yields the executed op after each step, or a BlockedOn while it cannot
    proceed (the same op is retried on the next resume).
    """

    def __init__(self, state: DeviceState, core: CoreState, es: EngineState):
        self.state = state
        self.core = core
        self.es = es
        self.T = state.cfg.tile_elems

    def cb(self, op: Operation, cb_id: int | None = None) -> CircularBuffer:
        cb_id = op.attributes["cb"] if cb_id is None else cb_id
        cb = self.core.cbs.get(cb_id)
        if cb is None:
            raise self.fail(op, f"cb {cb_id} was not created on core {self.core.id}")
        return cb

    def fail(self, op: Operation, msg: str) -> DeviceError:
        return DeviceError(error(f"{op.name} on core {self.core.id} ({self.es.kind}): {msg}", location_of(op)))

    def buffer(self, op: Operation, buf_id: int) -> np.ndarray:
        buf = self.state.dram.get(buf_id)
        if buf is None:
            raise self.fail(op, f"unknown buffer id {buf_id}")
        return buf

    def run(self) -> Iterator:
        f = self.es.program
        env = dict(zip(f.args, self.es.args))
        with np.errstate(all="ignore"):
            yield from self.block(f.entry, env)

    def until(self, op, cb: CircularBuffer, what: str, n: int, kind: str):
        if not cb.can(what, n):
            blocked = BlockedOn(op.attributes["cb"], n, kind)
            while not cb.can(what, n):
                yield blocked

    def block(self, block: Block, env: dict) -> Iterator:
        for op in block.ops:
            name = op.name
            self.es.current = op
            fn = PURE_OPS.get(name)
            try:
                if fn is not None:
                    r = fn(op, *[env[v] for v in op.operands])
                    if op.results:
                        env[op.results[0]] = r
                elif name == "scf.for":
                    lb, ub, step = (env[v] for v in op.operands)
                    body = op.regions[0].block
                    for i in range(lb, ub, step):
                        env[body.args[0]] = i
                        yield from self.block(body, env)
                elif name in ("func.return", "scf.yield"):
                    yield op
                    return
                else:
                    handler = _DEVICE_OPS.get(name)
                    if handler is None:
                        raise self.fail(op, "cannot run on a device engine")
                    yield from handler(self, op, env)
            except ProtocolError as e:
                raise self.fail(op, f"protocol violation: {e}") from None
            yield op

    # -- device ops ----------------------------------------------------------

    def read_tile(self, op, env):
        buf_id, tile, limit = (env[v] for v in op.operands)
        cb = self.cb(op)
        yield from self.until(op, cb, "reserve", 1, "space")
        data = _f32_view(self.buffer(op, buf_id))
        lo = tile * self.T
        hi = min(lo + self.T, limit)
        if hi > data.shape[0] or lo < 0:
            raise self.fail(op, f"tile {tile} reads past the end of buffer {buf_id}")
        t = np.full(self.T, op.attributes.get("pad", 0.0), dtype=np.float32)
        if hi > lo:
            t[: hi - lo] = data[lo:hi]
        cb.reserve(1)
        cb.write_slot(t)
        cb.push(1)

    def write_tile(self, op, env):
        buf_id, tile, limit = (env[v] for v in op.operands)
        cb = self.cb(op)
        yield from self.until(op, cb, "wait", 1, "data")
        cb.wait(1)
        t = cb.front()
        data = _f32_view(self.buffer(op, buf_id))
        lo = tile * self.T
        hi = min(lo + self.T, limit)
        if hi > data.shape[0] or lo < 0:
            raise self.fail(op, f"tile {tile} writes past the end of buffer {buf_id}")
        if hi > lo:
            data[lo:hi] = _tile_or_zero(t, self.T)[: hi - lo]
        cb.pop(1)

    def cb_op(self, op, env):
        cb = self.cb(op)
        n = op.attributes["n"]
        what = op.opname
        if what in ("reserve", "wait"):
            yield from self.until(op, cb, what, n, "space" if what == "reserve" else "data")
        getattr(cb, what)(n)

    def write_slot(self, op, env):
        self.cb(op).write_slot(np.array(env[op.operands[0]], dtype=np.float32))
        return
        yield

    def read_slot(self, op, env):
        env[op.results[0]] = _tile_or_zero(self.cb(op).front(), self.T).copy()
        return
        yield

    def pack_out(self, op, env):
        cb = self.cb(op)
        yield from self.until(op, cb, "reserve", 1, "space")
        cb.reserve(1)
        cb.write_slot(np.array(env[op.operands[0]], dtype=np.float32))
        cb.push(1)

    def binary(self, op, env):
        a, b = (env[v] for v in op.operands)
        env[op.results[0]] = exec_compute_op(op.opname, a, b, bool(op.attributes.get("reverse", 0)))
        return
        yield

    def noop(self, op, env):
        return
        yield


def _tile_or_zero(t, n: int) -> np.ndarray:
    return np.zeros(n, dtype=np.float32) if t is None else t


_DEVICE_OPS = {
    "tt_dm.read_tile": _Engine.read_tile,
    "tt_dm.write_tile": _Engine.write_tile,
    "tt_dm.barrier": _Engine.noop,
    "tt_cb.reserve": _Engine.cb_op,
    "tt_cb.push": _Engine.cb_op,
    "tt_cb.wait": _Engine.cb_op,
    "tt_cb.pop": _Engine.cb_op,
    "tt_cb.write_slot": _Engine.write_slot,
    "tt_cb.read_slot": _Engine.read_slot,
    "tt_compute.init": _Engine.noop,
    "tt_compute.copy_in": _Engine.read_slot,
    "tt_compute.pack_out": _Engine.pack_out,
    **{f"tt_compute.{o}_{s}": _Engine.binary for o in ("add", "sub", "mul", "div") for s in ("tiles", "scalar")},
}


def _summary(state: DeviceState) -> str:
    lines = []
    for c in sorted(state.cores):
        core = state.cores[c]
        for es in core.engines:
            where = es.current.name if es.current is not None else "-"
            lines.append(f"core {c} {es.kind}: {es.status} at {where}")
        for cb_id in sorted(core.cbs):
            cb = core.cbs[cb_id]
            lines.append(f"core {c} cb {cb_id}: {len(cb.queue)}/{cb.capacity} queued, {cb.reserved} reserved")
    return "\n".join(lines)


def run_device(state: DeviceState) -> DeviceState:
    """Run every installed kernel to completion (mutates and returns `state`).

    Raises DeadlockError or StepBudgetExceeded.
    """
    budget = state.cfg.max_steps
    trace = state.trace
    for c in sorted(state.cores):
        core = state.cores[c]
        core.engines = []
        for kind in KERNEL_KINDS:
            if kind in core.kernels:
                es = EngineState(kind, core.kernels[kind], core.args.get(kind, []))
                f = es.program
                if len(es.args) != len(f.args):
                    raise DeviceError(error(
                        f"core {c} {kind} kernel @{f.name} expects {len(f.args)} runtime args, got {len(es.args)}"))
                es.gen = _Engine(state, core, es).run()
                core.engines.append(es)
    engines = [(c, es) for c in sorted(state.cores) for es in state.cores[c].engines]
    while True:
        progressed = False
        live = False
        for c, es in engines:
            if es.status == "done":
                continue
            while True:
                try:
                    ev = next(es.gen)
                except StopIteration:
                    es.status = "done"
                    es.blocked_on = None
                    break
                if isinstance(ev, BlockedOn):
                    if es.status != "blocked":
                        state.steps += 1
                        if trace is not None:
                            trace.append(
                                f"STEP {state.steps} CORE {c} ENGINE {es.kind} OP {es.current.name} "
                                f"BLOCK cb={ev.cb} need={ev.need} kind={ev.kind}")
                    es.status = "blocked"
                    es.blocked_on = ev
                    live = True
                    break
                es.status = "runnable"
                es.blocked_on = None
                progressed = True
                state.steps += 1
                if trace is not None:
                    trace.append(f"STEP {state.steps} CORE {c} ENGINE {es.kind} OP {ev.name}")
                if state.steps > budget:
                    raise StepBudgetExceeded(budget, _summary(state))
        if not live:
            return state
        if not progressed:
            raise DeadlockError(DeadlockReport(state.steps, [
                DeadlockEntry(c, es.kind, es.current.name, es.blocked_on.cb, es.blocked_on.need, es.blocked_on.kind)
                for c, es in engines if es.status == "blocked"
            ]))
