"""Outline each ``offload.target`` into reader/compute/writer kernels plus a
tt_host launch sequence.

Kernel signature (shared by all three kinds of one region)::

    (buffer ids..., start_tile, num_tiles, n, scalars...)

Buffers follow map-list order (to, tofrom, from). ``n`` is the element
count: readers pad lanes at or past it, writers never store them.
"""

from __future__ import annotations

from ..config import DeviceConfig
from ..dialects import KERNEL_KIND_ATTR, KERNEL_KINDS, TILE_ELEMS_ATTR
from ..frontend.lower import ARG_NAMES_ATTR
from ..ir.core import Block, Builder, DiagnosticError, Function, Module, Operation, Region, Value, error, location_of
from ..ir.types import F32, I32, INDEX, TILE, SymbolRef
from .elementwise import Apply, Const, ElementwiseDag, Input, Scalar, map_order, map_roles, match_elementwise

KIND_CODES = {k: i for i, k in enumerate(KERNEL_KINDS)}
_COMMUTATIVE = ("add", "mul")


class _Consts:
    """Emit each (value, type) constant once per builder."""

    def __init__(self, b: Builder):
        self.b = b
        self.cache: dict[tuple, Value] = {}

    def __call__(self, value, type_=I32) -> Value:
        key = (type(value), value, type_)
        if key not in self.cache:
            self.cache[key] = self.b.value("arith.constant", [], type_, {"value": value})
        return self.cache[key]


def _kernel_names(fn: str, k: int) -> dict[str, str]:
    return {kind: f"{fn}_offload{k}_{kind}" for kind in KERNEL_KINDS}


class _Region:
    """Lowering state for one offload region."""

    def __init__(self, target: Operation, dag: ElementwiseDag, cfg: DeviceConfig, names: dict[str, str]):
        self.target = target
        self.dag = dag
        self.cfg = cfg
        self.kernels = names
        self.buffers = map_order(target)  # operand indices, buffer/arg order
        self.roles = map_roles(target)
        # input cbs in map order, output cb last
        self.in_cbs = {idx: i for i, (idx, _) in enumerate(dag.inputs)}
        self.out_cb = len(dag.inputs)
        self.num_cbs = len(dag.inputs) + 1

    def arg_types(self) -> list:
        return [I32] * len(self.buffers) + [I32, I32, I32] + [F32] * len(self.dag.scalars)

    def arg_names(self) -> list[str]:
        nm = self.dag.names
        bufs = [f"buf_{nm.get(i, f'arg{i}')}" for i in self.buffers]
        return bufs + ["start_tile", "num_tiles", "n"] + [nm.get(i, f"arg{i}") for i in self.dag.scalars]

    # -- device side -------------------------------------------------------

    def _kernel(self, kind: str) -> tuple[Function, list[Value], Value, Value, Value, list[Value]]:
        attrs = {KERNEL_KIND_ATTR: kind, ARG_NAMES_ATTR: self.arg_names(),
                 "tt.num_teams": self.target.attributes["num_teams"]}
        for key in ("num_threads", "simdlen"):
            if key in self.target.attributes:
                attrs[f"tt.{key}"] = self.target.attributes[key]
        f = Function(self.kernels[kind], self.arg_types(), attributes=attrs)
        a = f.args
        nb = len(self.buffers)
        return f, a[:nb], a[nb], a[nb + 1], a[nb + 2], a[nb + 3:]

    def _tile_loop(self, b: Builder, consts: _Consts, count: Value) -> Builder:
        ub = b.value("arith.index_cast", [count], INDEX)
        body = Block([INDEX])
        b.op("scf.for", [consts(0, INDEX), ub, consts(1, INDEX)], regions=[Region([body])])
        return Builder(body)

    def reader(self) -> Function:
        f, bufs, start, count, n, _ = self._kernel("reader")
        b = Builder(f.entry)
        c = _Consts(b)
        s = b.value("arith.index_cast", [start], INDEX)
        limit = b.value("arith.index_cast", [n], INDEX)
        lb = self._tile_loop(b, c, count)
        tile = lb.value("arith.addi", [s, lb.block.args[0]], INDEX)
        pad = 1.0 if self.dag.has_div else 0.0
        for idx, cb in self.in_cbs.items():
            buf = bufs[self.buffers.index(idx)]
            lb.op("tt_dm.read_tile", [buf, tile, limit], attributes={"cb": cb, "pad": pad})
        lb.op("scf.yield")
        b.op("tt_dm.barrier")
        b.op("func.return")
        return f

    def writer(self) -> Function:
        f, bufs, start, count, n, _ = self._kernel("writer")
        b = Builder(f.entry)
        c = _Consts(b)
        s = b.value("arith.index_cast", [start], INDEX)
        limit = b.value("arith.index_cast", [n], INDEX)
        lb = self._tile_loop(b, c, count)
        tile = lb.value("arith.addi", [s, lb.block.args[0]], INDEX)
        buf = bufs[self.buffers.index(self.dag.output)]
        lb.op("tt_dm.write_tile", [buf, tile, limit], attributes={"cb": self.out_cb})
        lb.op("scf.yield")
        b.op("tt_dm.barrier")
        b.op("func.return")
        return f

    def compute(self) -> Function:
        f, _, _, count, _, scalars = self._kernel("compute")
        b = Builder(f.entry)
        b.op("tt_compute.init")
        c = _Consts(b)
        lb = self._tile_loop(b, c, count)
        for cb in self.in_cbs.values():
            lb.op("tt_cb.wait", attributes={"cb": cb, "n": 1})
        tiles = {idx: lb.value("tt_compute.copy_in", [], TILE, {"cb": cb}) for idx, cb in self.in_cbs.items()}
        scalar_args = dict(zip(self.dag.scalars, scalars))
        inner = _Consts(lb)
        memo: dict = {}

        def gen(e) -> tuple[bool, Value]:
            """(is_tile, value)"""
            if e in memo:
                return memo[e]
            if isinstance(e, Input):
                out = (True, tiles[e.operand])
            elif isinstance(e, Scalar):
                out = (False, scalar_args[e.operand])
            elif isinstance(e, Const):
                out = (False, inner(e.value, F32))
            else:
                lt, lv = gen(e.lhs)
                rt, rv = gen(e.rhs)
                if lt and rt:
                    out = (True, lb.value(f"tt_compute.{e.op}_tiles", [lv, rv], TILE))
                elif lt:
                    out = (True, lb.value(f"tt_compute.{e.op}_scalar", [lv, rv], TILE))
                elif rt:
                    attrs = {} if e.op in _COMMUTATIVE else {"reverse": 1}
                    out = (True, lb.value(f"tt_compute.{e.op}_scalar", [rv, lv], TILE, attrs))
                else:
                    out = (False, lb.value(f"arith.{e.op}f", [lv, rv], F32))
            memo[e] = out
            return out

        is_tile, result = gen(self.dag.expr)
        assert is_tile, "matcher guarantees the stored value reads an array"
        lb.op("tt_compute.pack_out", [result], attributes={"cb": self.out_cb})
        for cb in self.in_cbs.values():
            lb.op("tt_cb.pop", attributes={"cb": cb, "n": 1})
        lb.op("scf.yield")
        b.op("func.return")
        return f

    # -- host side ---------------------------------------------------------

    def host_ops(self, operands: list[Value], first: bool, last: bool) -> list[Operation]:
        block = Block()
        b = Builder(block)
        c = _Consts(b)
        teams = self.target.attributes["num_teams"]
        T = self.cfg.tile_elems
        if first:
            b.op("tt_host.open_device", result_types=[I32])
        trip = self.dag.trip_count
        n = c(trip) if isinstance(trip, int) else operands[trip[1]]
        size = b.value("arith.muli", [n, c(4)], I32)
        bufs = {idx: b.value("tt_host.create_buffer", [size], I32) for idx in self.buffers}
        for idx in self.buffers:
            if self.roles[idx] in ("to", "tofrom"):
                b.op("tt_host.write_buffer", [bufs[idx], operands[idx]])
        # blocked partition evaluated at run time: earlier cores take the remainder
        total = b.value("arith.divsi", [b.value("arith.addi", [n, c(T - 1)], I32), c(T)], I32)
        base = b.value("arith.divsi", [total, c(teams)], I32)
        rem = b.value("arith.addi", [total, b.value("arith.muli", [base, c(-teams)], I32)], I32)
        scalars = [operands[i] for i in self.dag.scalars]
        start = c(0)
        for core in range(teams):
            extra = b.value("arith.divsi", [b.value("arith.addi", [rem, c(teams - 1 - core)], I32), c(teams)], I32)
            count = b.value("arith.addi", [base, extra], I32)
            cid = c(core)
            for cb in range(self.num_cbs):
                b.op("tt_host.create_cb", [cid, c(cb), c(self.cfg.cb_capacity)])
            for kind in KERNEL_KINDS:
                b.op("tt_host.create_kernel", [cid, c(KIND_CODES[kind])],
                     attributes={"kernel": SymbolRef(self.kernels[kind])})
            args = [bufs[i] for i in self.buffers] + [start, count, n] + scalars
            for kind in KERNEL_KINDS:
                b.op("tt_host.set_runtime_args", [cid] + args, attributes={"kernel": SymbolRef(self.kernels[kind])})
            if core + 1 < teams:
                start = b.value("arith.addi", [start, count], I32)
        b.op("tt_host.launch")
        b.op("tt_host.wait")
        for idx in self.buffers:
            if self.roles[idx] in ("from", "tofrom"):
                b.op("tt_host.read_buffer", [bufs[idx], operands[idx]])
        if last:
            b.op("tt_host.close_device")
        ops = block.ops
        block.ops = []
        return ops


def _check_clauses(target: Operation, cfg: DeviceConfig) -> None:
    a = target.attributes
    if a["num_teams"] > cfg.num_cores:
        raise DiagnosticError(error(
            f"num_teams({a['num_teams']}) exceeds the {cfg.num_cores} cores of the device", location_of(target)))
    simd = a.get("simdlen")
    if simd is not None and cfg.tile_elems % simd:
        raise DiagnosticError(error(
            f"simdlen({simd}) does not divide the tile width {cfg.tile_elems}", location_of(target)))


def _targets(region: Region):
    for block in region.blocks:
        for op in block.ops:
            if op.name == "offload.target":
                yield op
            else:
                for r in op.regions:
                    yield from _targets(r)


def _replace(region: Region, done: dict[int, list[Operation]]) -> None:
    for block in region.blocks:
        ops = []
        for op in block.ops:
            if id(op) in done:
                ops.extend(done[id(op)])
                continue
            for r in op.regions:
                _replace(r, done)
            ops.append(op)
        block.ops = []
        for op in ops:
            block.append(op)


def pass_offload_to_tt(m: Module, cfg: DeviceConfig | None = None) -> Module:
    cfg = cfg or DeviceConfig()
    out = m.clone()
    kernels: list[Function] = []
    for f in list(out.functions):
        if KERNEL_KIND_ATTR in f.attributes:
            continue
        targets = list(_targets(f.body))
        names = dict(enumerate(f.attributes.get(ARG_NAMES_ATTR, [])))
        done: dict[int, list[Operation]] = {}
        for k, target in enumerate(targets):
            _check_clauses(target, cfg)
            # operand names follow the host argument names when they are plain args
            arg_pos = {a: i for i, a in enumerate(f.args)}
            local = {i: names[arg_pos[v]] for i, v in enumerate(target.operands) if v in arg_pos and arg_pos[v] in names}
            dag = match_elementwise(target, local)
            r = _Region(target, dag, cfg, _kernel_names(f.name, k))
            kernels += [r.reader(), r.compute(), r.writer()]
            done[id(target)] = r.host_ops(list(target.operands), k == 0, k == len(targets) - 1)
        _replace(f.body, done)
    taken = {f.name for f in out.functions}
    for kf in kernels:
        if kf.name in taken:
            raise DiagnosticError(error(f"kernel symbol @{kf.name} collides with an existing function"))
    out.functions.extend(kernels)
    if kernels:
        out.attributes[TILE_ELEMS_ATTR] = cfg.tile_elems
    return out
