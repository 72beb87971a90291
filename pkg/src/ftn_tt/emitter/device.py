"""Device printer: kernel functions -> C-style source against a mock
Metalium-like API. The text is a reviewed artifact; the simulator runs the IR."""

from __future__ import annotations

from dataclasses import dataclass

from ..dialects import KERNEL_KIND_ATTR
from ..frontend.lower import ARG_NAMES_ATTR
from ..ir.core import Block, DiagnosticError, Function, Module, Operation, Value, error, location_of
from ..ir.types import MemRefType, TileType

_CTYPES = {"f32": "float", "i32": "int32_t", "index": "uint32_t", "i1": "bool"}
_CBINOPS = {"addf": "+", "subf": "-", "mulf": "*", "divf": "/", "addi": "+", "muli": "*", "divsi": "/"}
_CMP = {"eq": "==", "ne": "!=", "slt": "<", "sle": "<=", "sgt": ">", "sge": ">="}
_HOST_DIALECTS = ("tt_host", "offload", "ftn")


@dataclass(frozen=True)
class DeviceSourceUnit:
    symbol: str
    kind: str
    text: str
    api_calls: tuple[str, ...]

    @property
    def filename(self) -> str:
        return f"{self.symbol}.cpp.txt"


def _ctype(t) -> str:
    if isinstance(t, TileType):
        return "Tile"
    if isinstance(t, MemRefType):
        return f"{_CTYPES[t.element.kind]}*"
    return _CTYPES[t.kind]


def _float_literal(v: float) -> str:
    r = repr(float(v))
    if r in ("inf", "-inf", "nan"):
        return {"inf": "INFINITY", "-inf": "-INFINITY", "nan": "NAN"}[r]
    return r + "f"


class _Emitter:
    def __init__(self, f: Function):
        self.f = f
        self.lines: list[str] = []
        self.names: dict[Value, str] = {}
        self.api: list[str] = []
        self.loops = 0

    def name(self, v: Value) -> str:
        return self.names[v]

    def define(self, v: Value) -> str:
        n = f"v{len(self.names)}" if not isinstance(v.type, TileType) else f"t{len(self.names)}"
        self.names[v] = n
        return n

    def call(self, indent: str, fn: str, *args, result: Value | None = None) -> None:
        if fn not in self.api:
            self.api.append(fn)
        text = f"{fn}({', '.join(str(a) for a in args)});"
        if result is not None:
            text = f"{_ctype(result.type)} {self.define(result)} = {text}"
        self.lines.append(indent + text)

    def emit(self) -> str:
        f = self.f
        kind = f.attributes[KERNEL_KIND_ATTR]
        self.lines += [f"// @{f.name}: {kind} kernel", '#include "mock_metalium.h"', "", "void kernel_main() {"]
        arg_names = f.attributes.get(ARG_NAMES_ATTR) or [f"arg{i}" for i in range(len(f.args))]
        for i, (a, n) in enumerate(zip(f.args, arg_names)):
            self.names[a] = n
            self.call("    ", f"get_arg_val<{_ctype(a.type)}>", i)
            self.lines[-1] = f"    {_ctype(a.type)} {n} = {self.lines[-1].strip()}"
        self.block(f.entry, "    ")
        self.lines.append("}")
        return "\n".join(self.lines) + "\n"

    def block(self, block: Block, indent: str) -> None:
        for op in block.ops:
            self.op(op, indent)

    def op(self, op: Operation, indent: str) -> None:
        if op.dialect in _HOST_DIALECTS:
            raise DiagnosticError(error(f"{op.name}: host op inside device kernel @{self.f.name}", location_of(op)))
        a = op.attributes
        ops = [self.name(v) for v in op.operands]
        d, o = op.dialect, op.opname
        if op.name in ("func.return", "scf.yield"):
            return
        if op.name == "arith.constant":
            r = op.results[0]
            lit = _float_literal(a["value"]) if r.type.kind == "f32" else str(a["value"])
            self.lines.append(f"{indent}const {_ctype(r.type)} {self.define(r)} = {lit};")
        elif d == "arith" and o in _CBINOPS:
            r = op.results[0]
            self.lines.append(f"{indent}{_ctype(r.type)} {self.define(r)} = {ops[0]} {_CBINOPS[o]} {ops[1]};")
        elif op.name == "arith.cmpi":
            r = op.results[0]
            self.lines.append(f"{indent}bool {self.define(r)} = {ops[0]} {_CMP[a['predicate']]} {ops[1]};")
        elif op.name == "arith.index_cast":
            r = op.results[0]
            self.lines.append(f"{indent}{_ctype(r.type)} {self.define(r)} = ({_ctype(r.type)}){ops[0]};")
        elif op.name == "memref.load":
            r = op.results[0]
            self.lines.append(f"{indent}{_ctype(r.type)} {self.define(r)} = {ops[0]}[{ops[1]}];")
        elif op.name == "memref.store":
            self.lines.append(f"{indent}{ops[1]}[{ops[2]}] = {ops[0]};")
        elif op.name == "memref.dim":
            r = op.results[0]
            self.call(indent, "memref_dim", *ops, result=r)
        elif op.name == "memref.alloc":
            self.call(indent, "l1_alloc", *ops, result=op.results[0])
        elif op.name == "scf.for":
            body = op.regions[0].block
            iv = f"i{self.loops}"
            self.loops += 1
            self.names[body.args[0]] = iv
            lb, ub, step = ops
            self.lines.append(f"{indent}for (uint32_t {iv} = {lb}; {iv} < {ub}; {iv} += {step}) {{")
            self.block(body, indent + "    ")
            self.lines.append(f"{indent}}}")
        elif op.name == "func.call":
            self.call(indent, a["callee"].name, *ops, result=op.results[0] if op.results else None)
        elif d == "tt_dm":
            self.data_movement(op, ops, indent)
        elif d == "tt_cb":
            self.cb(op, ops, indent)
        elif d == "tt_compute":
            self.compute(op, ops, indent)
        else:
            raise DiagnosticError(error(f"{op.name}: no device rendering", location_of(op)))

    def data_movement(self, op, ops, indent):
        cb = op.attributes.get("cb")
        if op.opname == "read_tile":
            buf, tile, limit = ops
            pad = _float_literal(op.attributes.get("pad", 0.0))
            self.call(indent, "cb_reserve_back", cb, 1)
            self.call(indent, "noc_async_read_tile", buf, tile, f"get_write_ptr({cb})", limit, pad)
            self.call(indent, "noc_async_read_barrier")
            self.call(indent, "cb_push_back", cb, 1)
        elif op.opname == "write_tile":
            buf, tile, limit = ops
            self.call(indent, "cb_wait_front", cb, 1)
            self.call(indent, "noc_async_write_tile", buf, tile, f"get_read_ptr({cb})", limit)
            self.call(indent, "noc_async_write_barrier")
            self.call(indent, "cb_pop_front", cb, 1)
        else:
            self.call(indent, "noc_async_full_barrier")

    def cb(self, op, ops, indent):
        a = op.attributes
        api = {"reserve": "cb_reserve_back", "push": "cb_push_back", "wait": "cb_wait_front", "pop": "cb_pop_front"}
        if op.opname in api:
            self.call(indent, api[op.opname], a["cb"], a["n"])
        elif op.opname == "write_slot":
            self.call(indent, "cb_write_slot", a["cb"], ops[0])
        else:
            self.call(indent, "cb_read_slot", a["cb"], result=op.results[0])

    def compute(self, op, ops, indent):
        o = op.opname
        a = op.attributes
        if o == "init":
            self.call(indent, "compute_kernel_init")
        elif o == "copy_in":
            self.call(indent, "copy_tile", a["cb"], result=op.results[0])
        elif o == "pack_out":
            self.call(indent, "cb_reserve_back", a["cb"], 1)
            self.call(indent, "pack_tile", ops[0], a["cb"])
            self.call(indent, "cb_push_back", a["cb"], 1)
        elif o.endswith("_tiles"):
            self.call(indent, o, *ops, result=op.results[0])
        else:
            base = o.split("_")[0]
            fn = f"r{base}_scalar_tile" if a.get("reverse", 0) else f"{base}_scalar_tile"
            self.call(indent, fn, *ops, result=op.results[0])


def emit_device_source(m: Module, sym: str) -> DeviceSourceUnit:
    f = m.get(sym)
    if f is None or KERNEL_KIND_ATTR not in f.attributes:
        raise DiagnosticError(error(f"@{sym} is not a device kernel"))
    e = _Emitter(f)
    text = e.emit()
    return DeviceSourceUnit(sym, f.attributes[KERNEL_KIND_ATTR], text, tuple(e.api))


def emit_all_device_sources(m: Module) -> list[DeviceSourceUnit]:
    return [emit_device_source(m, f.name) for f in m.functions if KERNEL_KIND_ATTR in f.attributes]
