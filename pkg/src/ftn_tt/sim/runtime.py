"""Mock host runtime behind the ``tt_rt_*`` ABI, host programs and replay."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..config import DeviceConfig
from ..dialects import KERNEL_KIND_ATTR, KERNEL_KINDS, RUNTIME_ABI, TILE_ELEMS_ATTR
from ..ir.core import DiagnosticError, Module, error
from ..ir.types import SymbolRef
from .cb import CircularBuffer
from .device import DeviceState, run_device
from .interp import Interpreter, argument_names, bind_arguments, entry_function


class HostRuntimeError(DiagnosticError):
    pass


def _rt_error(msg: str) -> HostRuntimeError:
    return HostRuntimeError(error(msg))


@dataclass(frozen=True)
class RuntimeCall:
    abi: str
    ints: tuple[int, ...] = ()
    floats: tuple[float, ...] = ()
    payload: str | None = None  # name of the host array a span refers to
    kernel: str | None = None
    result: int | None = None

    def format(self) -> str:
        parts = ["CALL", self.abi]
        if self.kernel is not None:
            parts.append(f"@{self.kernel}")
        parts += [str(i) for i in self.ints]
        parts += [repr(float(f)) for f in self.floats]
        if self.payload is not None:
            parts.append(f"&{self.payload}")
        if self.result is not None:
            parts += ["->", str(self.result)]
        return " ".join(parts)


@dataclass
class HostProgram:
    calls: list[RuntimeCall]
    module: Module  # supplies the kernels named by create_kernel
    payloads: dict[str, np.ndarray] = field(default_factory=dict)  # host arrays by name, before the run

    def trace(self) -> str:
        return "".join(c.format() + "\n" for c in self.calls)


class DeviceRuntime:
    """Executes runtime calls against a simulated device."""

    def __init__(self, module: Module, cfg: DeviceConfig, trace: list[str] | None = None):
        self.module = module
        # kernels index DRAM in tiles of the width they were compiled for
        tile = module.attributes.get(TILE_ELEMS_ATTR)
        if tile is not None and tile != cfg.tile_elems:
            cfg = replace(cfg, tile_elems=tile)
        self.cfg = cfg
        self.trace = trace
        self.state = DeviceState(cfg)
        self.open = False
        self.launched = False
        self.waited = True
        self.next_buffer = 0
        self.runs: list[DeviceState] = []

    def _need_open(self, what: str) -> None:
        if not self.open:
            raise _rt_error(f"{what} before tt_rt_open_device")

    def _buffer(self, buf_id: int) -> np.ndarray:
        buf = self.state.dram.get(buf_id)
        if buf is None:
            raise _rt_error(f"unknown buffer id {buf_id}")
        return buf

    def _kernel_kind(self, sym: str, core: int) -> tuple[str, object]:
        f = self.module.get(sym)
        if f is None or KERNEL_KIND_ATTR not in f.attributes:
            raise _rt_error(f"@{sym} is not a device kernel")
        return f.attributes[KERNEL_KIND_ATTR], f

    def open_device(self) -> int:
        if self.open:
            raise _rt_error("device already open")
        self.open = True
        return 0

    def create_buffer(self, size: int) -> int:
        self._need_open("create_buffer")
        if size < 0:
            raise _rt_error(f"negative buffer size {size}")
        buf_id = self.next_buffer
        self.next_buffer += 1
        self.state.dram[buf_id] = np.zeros(size, dtype=np.uint8)
        return buf_id

    def write_buffer(self, buf_id: int, span: np.ndarray) -> None:
        self._need_open("write_buffer")
        buf = self._buffer(buf_id)
        data = np.ascontiguousarray(span, dtype="<f4").view(np.uint8)
        if data.shape[0] != buf.shape[0]:
            raise _rt_error(f"payload of {data.shape[0]} bytes does not match buffer {buf_id} of {buf.shape[0]} bytes")
        buf[:] = data

    def read_buffer(self, buf_id: int, span: np.ndarray) -> None:
        self._need_open("read_buffer")
        if self.launched and not self.waited:
            raise _rt_error(f"read of buffer {buf_id} before tt_rt_wait")
        buf = self._buffer(buf_id)
        if span.shape[0] * 4 != buf.shape[0]:
            raise _rt_error(f"host span of {span.shape[0] * 4} bytes does not match buffer {buf_id} of {buf.shape[0]} bytes")
        span[:] = buf.view("<f4")

    def create_cb(self, core: int, cb_id: int, capacity: int) -> None:
        self._need_open("create_cb")
        if capacity < 1:
            raise _rt_error(f"cb {cb_id} capacity must be positive")
        self.state.core(core).cbs[cb_id] = CircularBuffer(capacity)

    def create_kernel(self, core: int, kind_code: int, sym: str) -> None:
        self._need_open("create_kernel")
        kind, f = self._kernel_kind(sym, core)
        if not 0 <= kind_code < len(KERNEL_KINDS) or KERNEL_KINDS[kind_code] != kind:
            raise _rt_error(f"@{sym} is a {kind} kernel, not kind {kind_code}")
        self.state.core(core).kernels[kind] = f

    def set_runtime_args(self, core: int, sym: str, args: list) -> None:
        self._need_open("set_runtime_args")
        kind, _ = self._kernel_kind(sym, core)
        self.state.core(core).args[kind] = list(args)

    def launch(self) -> None:
        self._need_open("launch")
        if not any(c.kernels for c in self.state.cores.values()):
            raise _rt_error("launch without kernels")
        self.state.trace = self.trace
        run_device(self.state)
        self.runs.append(self.state)
        # kernels and cbs are per launch; DRAM persists
        self.state = DeviceState(self.cfg, dram=self.state.dram, steps=self.state.steps)
        self.launched = True
        self.waited = False

    def wait(self) -> None:
        self._need_open("wait")
        self.waited = True

    def close_device(self) -> None:
        self._need_open("close_device")
        self.open = False

    def dispatch(self, call: RuntimeCall, span: np.ndarray | None = None):
        name = call.abi.removeprefix("tt_rt_")
        if call.abi not in RUNTIME_ABI:
            raise _rt_error(f"unknown runtime function {call.abi}")
        if name in ("write_buffer", "read_buffer"):
            return getattr(self, name)(call.ints[0], span)
        if name == "create_kernel":
            return self.create_kernel(*call.ints, call.kernel)
        if name == "set_runtime_args":
            return self.set_runtime_args(call.ints[0], call.kernel, _runtime_args(call))
        return getattr(self, name)(*call.ints)


def _runtime_args(call: RuntimeCall) -> list:
    return list(call.ints[1:]) + [np.float32(f) for f in call.floats]


class _Recorder:
    """Interpreter call hook: records each runtime call, then executes it."""

    def __init__(self, runtime: DeviceRuntime | None, names: dict[int, str]):
        self.runtime = runtime
        self.names = names
        self.calls: list[RuntimeCall] = []
        self.sizes: dict[int, int] = {}
        self.next_buffer = 0

    def __call__(self, callee: str, op, args: list):
        if callee not in RUNTIME_ABI:
            raise _rt_error(f"unknown runtime function @{callee}")
        kernel = op.attributes.get("kernel")
        kernel = kernel.name if isinstance(kernel, SymbolRef) else None
        ints, floats, payload, span = [], [], None, None
        for a in args:
            if isinstance(a, np.ndarray):
                span = a
                payload = self.names.get(id(a), "<anonymous>")
            elif isinstance(a, np.floating):
                floats.append(float(a))
            else:
                ints.append(int(a))
        if callee == "tt_rt_write_buffer" and ints[0] in self.sizes and span.shape[0] * 4 != self.sizes[ints[0]]:
            raise _rt_error(
                f"payload '{payload}' has {span.shape[0]} element(s) but buffer {ints[0]} holds {self.sizes[ints[0]] // 4}")
        call = RuntimeCall(callee, tuple(ints), tuple(floats), payload, kernel)
        result = None
        if self.runtime is not None:
            result = self.runtime.dispatch(call, span)
        elif RUNTIME_ABI[callee][3]:
            # recording without a device: ids are handed out the way the runtime would
            if callee == "tt_rt_create_buffer":
                result = self.next_buffer
                self.next_buffer += 1
            else:
                result = 0
        if callee == "tt_rt_create_buffer":
            self.sizes[result] = ints[0]
        if result is not None:
            call = RuntimeCall(callee, call.ints, call.floats, payload, kernel, int(result))
        self.calls.append(call)
        return result


@dataclass
class HostRun:
    outputs: dict[str, np.ndarray]
    calls: list[RuntimeCall]
    runtime: DeviceRuntime | None


def run_host(m: Module, inputs: dict, cfg: DeviceConfig | None = None, trace: list[str] | None = None,
             execute: bool = True, entry: str | None = None) -> HostRun:
    """Interpret the lowered host function; runtime calls go to a simulated device."""
    cfg = cfg or DeviceConfig()
    f = entry_function(m, entry)
    if f is None:
        return HostRun({}, [], None)
    args = bind_arguments(f, inputs)
    names = {id(a): n for n, a in zip(argument_names(f), args) if isinstance(a, np.ndarray)}
    runtime = DeviceRuntime(m, cfg, trace) if execute else None
    rec = _Recorder(runtime, names)
    Interpreter(m, rec).call(f, args)
    outputs = {n: a for n, a in zip(argument_names(f), args) if isinstance(a, np.ndarray)}
    return HostRun(outputs, rec.calls, runtime)


@dataclass
class ReplayResult:
    dram: dict[int, np.ndarray]
    outputs: dict[str, np.ndarray]
    trace: list[str] | None
    steps: int


def replay_host(p: HostProgram, cfg: DeviceConfig | None = None, trace: bool = False) -> ReplayResult:
    """Execute a recorded call list against a fresh device.

    Host arrays start as the program's payloads; read_buffer updates them, so
    later write_buffer calls see earlier results. Returns every host array.
    """
    cfg = cfg or DeviceConfig()
    lines: list[str] | None = [] if trace else None
    rt = DeviceRuntime(p.module, cfg, lines)
    host = {name: np.array(a, dtype=np.float32) for name, a in p.payloads.items()}
    for call in p.calls:
        span = None
        if call.abi in ("tt_rt_write_buffer", "tt_rt_read_buffer"):
            if call.payload not in host:
                raise _rt_error(f"no payload bound for '{call.payload}'")
            span = host[call.payload]
        result = rt.dispatch(call, span)
        if call.result is not None and result != call.result:
            raise _rt_error(f"{call.abi} returned {result}, the program expects {call.result}")
    return ReplayResult(rt.state.dram, host, lines, rt.state.steps)
