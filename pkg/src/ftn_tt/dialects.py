"""Op schemas for every dialect the pipeline speaks.

Dialects: ``ftn`` (surface Fortran), the standard subset (``func``, ``arith``,
``scf``, ``memref``), ``offload`` (target-region surrogate) and the four
accelerator dialects ``tt_host``, ``tt_dm``, ``tt_cb``, ``tt_compute``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .ir.core import Diagnostic, Function, Location, Operation, error, function_of, location_of
from .ir.types import (
    I1,
    INDEX,
    MemRefType,
    ScalarType,
    SymbolRef,
    TileType,
    Type,
    attr_kind,
)

KERNEL_KINDS = ("reader", "compute", "writer")
KERNEL_KIND_ATTR = "tt.kernel_kind"
TILE_ELEMS_ATTR = "tt.tile_elems"  # module attribute: tile width the kernels were compiled for

DIALECT_GROUPS = {
    "ftn": ("ftn",),
    "standard": ("func", "arith", "scf", "memref"),
    "offload": ("offload",),
    "tt_host": ("tt_host",),
    "tt_dm": ("tt_dm",),
    "tt_cb": ("tt_cb",),
    "tt_compute": ("tt_compute",),
}

# host runtime ABI: name -> (fixed i32 arg count, takes a host span, takes trailing values, has i32 result)
RUNTIME_ABI = {
    "tt_rt_open_device": (0, False, False, True),
    "tt_rt_create_buffer": (1, False, False, True),
    "tt_rt_write_buffer": (1, True, False, False),
    "tt_rt_read_buffer": (1, True, False, False),
    "tt_rt_create_cb": (3, False, False, False),
    "tt_rt_create_kernel": (2, False, False, False),
    "tt_rt_set_runtime_args": (1, False, True, False),
    "tt_rt_launch": (0, False, False, False),
    "tt_rt_wait": (0, False, False, False),
    "tt_rt_close_device": (0, False, False, False),
}


def _type_matches(t: Type, pattern: str) -> bool:
    if pattern == "any":
        return True
    if pattern == "memref":
        return isinstance(t, MemRefType)
    if pattern == "tile":
        return isinstance(t, TileType)
    if not isinstance(t, ScalarType):
        return False
    if pattern == "int":
        return t.kind in ("i32", "index")
    if pattern == "num":
        return t.kind in ("f32", "i32", "index", "i1")
    return t.kind == pattern


def _attr_matches(value, kind: str) -> bool:
    try:
        k = attr_kind(value)
    except TypeError:
        return False
    if kind == "number":
        return k in ("int", "float")
    return k == kind


@dataclass(frozen=True)
class OpSpec:
    dialect: str
    opname: str
    operands: tuple[str, ...] = ()
    results: tuple[str, ...] = ()
    attrs: dict[str, str] = field(default_factory=dict)
    optional_attrs: dict[str, str] = field(default_factory=dict)
    regions: int = 0
    context: str = "any"  # host | device | any
    rule: str | None = None
    terminator: bool = False
    isolated: bool = False

    @property
    def name(self) -> str:
        return f"{self.dialect}.{self.opname}"


def _arity(patterns: tuple[str, ...]) -> tuple[int, str | None]:
    """Fixed count and the variadic tail pattern, if any."""
    if patterns and patterns[-1].startswith("*"):
        return len(patterns) - 1, patterns[-1][1:]
    return len(patterns), None


def _check_list(kind: str, types: list[Type], patterns: tuple[str, ...]) -> str | None:
    fixed, tail = _arity(patterns)
    if len(types) < fixed or (tail is None and len(types) != fixed):
        want = f"{fixed}" if tail is None else f"at least {fixed}"
        return f"{kind} count mismatch: expected {want}, got {len(types)}"
    for i, t in enumerate(types):
        pat = patterns[i] if i < fixed else tail
        if not _type_matches(t, pat):
            return f"{kind} #{i} has type {t}, expected {pat}"
    return None


class DialectRegistry:
    def __init__(self, specs=()):
        self.specs: dict[tuple[str, str], OpSpec] = {}
        for s in specs:
            key = (s.dialect, s.opname)
            if key in self.specs:
                raise ValueError(f"duplicate op spec {s.name}")
            self.specs[key] = s

    def lookup(self, dialect: str, opname: str) -> OpSpec | None:
        return self.specs.get((dialect, opname))

    def __contains__(self, name: str) -> bool:
        d, _, o = name.partition(".")
        return (d, o) in self.specs

    def ops_of(self, dialect: str) -> list[OpSpec]:
        return [s for (d, _), s in self.specs.items() if d == dialect]

    @property
    def dialects(self) -> list[str]:
        return sorted({d for d, _ in self.specs})

    def verify_op(self, op: Operation, spec: OpSpec, module=None) -> list[Diagnostic]:
        return verify_op(op, spec, module)

    def verify_function(self, f: Function, module=None) -> list[Diagnostic]:
        return verify_function(f, self, module)


def context_of(op: Operation) -> str | None:
    f = function_of(op)
    if f is None:
        return None
    return "device" if KERNEL_KIND_ATTR in f.attributes else "host"


def verify_op(op: Operation, spec: OpSpec, module=None) -> list[Diagnostic]:
    """Arity, type patterns, attributes, regions, context and the extra rule."""
    diags: list[Diagnostic] = []

    def err(msg: str) -> None:
        diags.append(error(f"{op.name}: {msg}", location_of(op)))

    msg = _check_list("operand", [v.type for v in op.operands], spec.operands)
    if msg:
        err(msg)
    msg = _check_list("result", [r.type for r in op.results], spec.results)
    if msg:
        err(msg)
    for name, kind in spec.attrs.items():
        if name not in op.attributes:
            err(f"missing required attribute '{name}'")
        elif not _attr_matches(op.attributes[name], kind):
            err(f"attribute '{name}' must be {kind}")
    for name, kind in spec.optional_attrs.items():
        if name in op.attributes and not _attr_matches(op.attributes[name], kind):
            err(f"attribute '{name}' must be {kind}")
    if len(op.regions) != spec.regions:
        err(f"region count mismatch: expected {spec.regions}, got {len(op.regions)}")
    ctx = context_of(op)
    if spec.context != "any" and ctx is not None and ctx != spec.context:
        err(f"op not allowed in {ctx} context")
    if spec.terminator and op.parent is not None and op.parent.ops[-1] is not op:
        err("terminator must be the last op of its block")
    if not diags and spec.rule:
        for m in _RULES[spec.rule](op, module):
            err(m)
    return diags


# -- extra verifier rules ------------------------------------------------------


def _rule_loop_body(terminator: str) -> Callable:
    def rule(op: Operation, module) -> list[str]:
        region = op.regions[0]
        if len(region.blocks) != 1:
            return ["loop body must have exactly one block"]
        block = region.block
        if len(block.args) != 1 or block.args[0].type != INDEX:
            return ["loop body must take one index induction argument"]
        if not block.ops or block.ops[-1].name != terminator:
            return [f"loop body must end with {terminator}"]
        return []

    return rule


def _rule_ftn_terminated(op: Operation, module) -> list[str]:
    block = op.regions[0].blocks[-1]
    if not block.ops or block.ops[-1].name != "ftn.end":
        return ["region must end with ftn.end"]
    return []


def _rule_memref_access(op: Operation, module) -> list[str]:
    if op.opname == "load":
        ref, elem_t = op.operands[0].type, op.results[0].type
    else:
        ref, elem_t = op.operands[1].type, op.operands[0].type
    if ref.element != elem_t:
        return [f"element type {elem_t} does not match {ref}"]
    if len(ref.shape) != 1:
        return ["only rank-1 memrefs are supported"]
    return []


def _rule_constant(op: Operation, module) -> list[str]:
    t = op.results[0].type
    v = op.attributes["value"]
    if t.kind == "f32" and not isinstance(v, float):
        return ["f32 constant needs a float value"]
    if t.kind != "f32" and not isinstance(v, int):
        return [f"{t} constant needs an integer value"]
    if t == I1 and v not in (0, 1):
        return ["i1 constant must be 0 or 1"]
    return []


def _rule_same_int(op: Operation, module) -> list[str]:
    a, b = op.operands
    if a.type != b.type or op.results[0].type != a.type:
        return ["operand and result types must agree"]
    return []


CMPI_PREDICATES = ("eq", "ne", "slt", "sle", "sgt", "sge")


def _rule_cmpi(op: Operation, module) -> list[str]:
    out = []
    if op.operands[0].type != op.operands[1].type:
        out.append("operand types must agree")
    if op.attributes["predicate"] not in CMPI_PREDICATES:
        out.append(f"unknown predicate {op.attributes['predicate']!r}")
    return out


def _rule_index_cast(op: Operation, module) -> list[str]:
    if op.operands[0].type == op.results[0].type:
        return ["index_cast must change between i32 and index"]
    return []


def _rule_alloc(op: Operation, module) -> list[str]:
    t = op.results[0].type
    dynamic = sum(1 for d in t.shape if d is None)
    if len(op.operands) != dynamic:
        return [f"{t} needs {dynamic} dynamic size operands, got {len(op.operands)}"]
    return []


def _rule_return(op: Operation, module) -> list[str]:
    f = function_of(op)
    if f is None or op.parent.parent is not f.body:
        return ["func.return must be directly inside a function body"]
    want = [] if f.result_type is None else [f.result_type]
    got = [v.type for v in op.operands]
    if got != want:
        return [f"returns ({', '.join(map(str, got))}) but function result is ({', '.join(map(str, want))})"]
    return []


def _rule_call(op: Operation, module) -> list[str]:
    callee = op.attributes["callee"].name
    target = module.get(callee) if module is not None else None
    if target is not None:
        want = [a.type for a in target.args]
        if [v.type for v in op.operands] != want:
            return [f"argument types do not match @{callee}"]
        rt = [] if target.result_type is None else [target.result_type]
        if [r.type for r in op.results] != rt:
            return [f"result types do not match @{callee}"]
        return []
    if callee not in RUNTIME_ABI:
        return [f"call to unknown function @{callee}"]
    n_int, span, variadic, has_result = RUNTIME_ABI[callee]
    types = [v.type for v in op.operands]
    fixed = types[:n_int]
    if len(fixed) < n_int or any(t.kind != "i32" for t in fixed if isinstance(t, ScalarType)) or any(
        not isinstance(t, ScalarType) for t in fixed
    ):
        return [f"@{callee} takes {n_int} leading i32 arguments"]
    rest = types[n_int:]
    if span and (len(rest) != 1 or not isinstance(rest[0], MemRefType)):
        return [f"@{callee} takes a host memref span"]
    if not span and not variadic and rest:
        return [f"@{callee} takes {n_int} arguments, got {len(types)}"]
    if has_result != bool(op.results):
        return [f"@{callee} result arity mismatch"]
    if callee in ("tt_rt_create_kernel", "tt_rt_set_runtime_args"):
        return _rule_kernel_ref(op, module)
    return []


def _rule_kernel_ref(op: Operation, module) -> list[str]:
    ref = op.attributes.get("kernel")
    if not isinstance(ref, SymbolRef):
        return ["missing 'kernel' symbol attribute"]
    if module is None:
        return []
    k = module.get(ref.name)
    if k is None or KERNEL_KIND_ATTR not in k.attributes:
        return [f"@{ref.name} is not a device kernel"]
    if op.name.endswith("set_runtime_args"):
        args = op.operands[1:]
        if [v.type for v in args] != [a.type for a in k.args]:
            return [f"runtime args do not match the signature of @{ref.name}"]
    return []


def _rule_offload_target(op: Operation, module) -> list[str]:
    out = []
    a = op.attributes
    n = len(op.operands)
    seen: set[int] = set()
    for key in ("map_to", "map_from", "map_tofrom"):
        for idx in a[key]:
            if not isinstance(idx, int) or not 0 <= idx < n:
                out.append(f"{key} index {idx!r} out of range")
            elif not isinstance(op.operands[idx].type, MemRefType):
                out.append(f"{key} index {idx} does not name a memref operand")
            elif idx in seen:
                out.append(f"operand {idx} appears in more than one map list")
            else:
                seen.add(idx)
    for key in ("num_teams", "num_threads", "simdlen"):
        if key in a and a[key] < 1:
            out.append(f"{key} must be positive")
    block = op.regions[0].block if op.regions[0].blocks else None
    if block is None or [x.type for x in block.args] != [v.type for v in op.operands]:
        out.append("region arguments must mirror the operands")
    return out


def _rule_cb(op: Operation, module) -> list[str]:
    out = []
    if op.attributes["cb"] < 0:
        out.append("cb id must be non-negative")
    if "n" in op.attributes and op.attributes["n"] < 1:
        out.append("tile count must be at least 1")
    return out


def _rule_scalar_tile(op: Operation, module) -> list[str]:
    if op.attributes.get("reverse", 0) not in (0, 1):
        return ["reverse must be 0 or 1"]
    return []


def _rule_function(f: Function, module) -> list[str]:
    out = []
    kind = f.attributes.get(KERNEL_KIND_ATTR)
    if kind is not None and kind not in KERNEL_KINDS:
        out.append(f"unknown kernel kind {kind!r}")
    if kind is not None and f.result_type is not None:
        out.append("device kernels return nothing")
    for block in f.body.blocks:
        if not block.ops or block.ops[-1].name != "func.return":
            out.append("function body must end with func.return")
            break
    return out


_RULES: dict[str, Callable] = {
    "do_loop": _rule_loop_body("ftn.end"),
    "scf_for": _rule_loop_body("scf.yield"),
    "ftn_terminated": _rule_ftn_terminated,
    "memref_access": _rule_memref_access,
    "constant": _rule_constant,
    "same_int": _rule_same_int,
    "cmpi": _rule_cmpi,
    "index_cast": _rule_index_cast,
    "alloc": _rule_alloc,
    "return": _rule_return,
    "call": _rule_call,
    "kernel_ref": _rule_kernel_ref,
    "offload_target": _rule_offload_target,
    "cb": _rule_cb,
    "scalar_tile": _rule_scalar_tile,
    "function": _rule_function,
}


def _specs() -> list[OpSpec]:
    S = OpSpec
    specs = [
        # ftn
        S("ftn", "subroutine", attrs={"name": "string"}, regions=1, context="host", rule="ftn_terminated"),
        S("ftn", "do_loop", ("index", "index", "index"), regions=1, rule="do_loop"),
        S("ftn", "load", ("memref", "index"), ("num",), rule="memref_access"),
        S("ftn", "store", ("num", "memref", "index"), rule="memref_access"),
        S("ftn", "end", terminator=True),
        # func
        S("func", "func", regions=1, rule="function"),
        S("func", "return", ("*any",), terminator=True, rule="return"),
        S("func", "call", ("*any",), ("*any",), attrs={"callee": "symbol"},
          optional_attrs={"kernel": "symbol"}, rule="call"),
        # arith
        S("arith", "constant", (), ("num",), attrs={"value": "number"}, rule="constant"),
        *(S("arith", n, ("f32", "f32"), ("f32",)) for n in ("addf", "subf", "mulf", "divf")),
        *(S("arith", n, ("int", "int"), ("int",), rule="same_int") for n in ("addi", "muli", "divsi")),
        S("arith", "cmpi", ("int", "int"), ("i1",), attrs={"predicate": "string"}, rule="cmpi"),
        S("arith", "index_cast", ("int",), ("int",), rule="index_cast"),
        # scf
        S("scf", "for", ("index", "index", "index"), regions=1, rule="scf_for"),
        S("scf", "yield", terminator=True),
        # memref
        S("memref", "alloc", ("*index",), ("memref",), rule="alloc"),
        S("memref", "load", ("memref", "index"), ("num",), rule="memref_access"),
        S("memref", "store", ("num", "memref", "index"), rule="memref_access"),
        S("memref", "dim", ("memref", "index"), ("index",)),
        # offload
        S("offload", "target", ("*any",),
          attrs={"num_teams": "int", "map_to": "array", "map_from": "array", "map_tofrom": "array"},
          optional_attrs={"num_threads": "int", "simdlen": "int"},
          regions=1, context="host", rule="offload_target", isolated=True),
        # tt_host
        S("tt_host", "open_device", (), ("i32",), context="host"),
        S("tt_host", "create_buffer", ("i32",), ("i32",), context="host"),
        S("tt_host", "write_buffer", ("i32", "memref"), context="host"),
        S("tt_host", "read_buffer", ("i32", "memref"), context="host"),
        S("tt_host", "create_cb", ("i32", "i32", "i32"), context="host"),
        S("tt_host", "create_kernel", ("i32", "i32"), attrs={"kernel": "symbol"}, context="host",
          rule="kernel_ref"),
        S("tt_host", "set_runtime_args", ("i32", "*num"), attrs={"kernel": "symbol"}, context="host",
          rule="kernel_ref"),
        S("tt_host", "launch", context="host"),
        S("tt_host", "wait", context="host"),
        S("tt_host", "close_device", context="host"),
        # tt_dm
        S("tt_dm", "read_tile", ("i32", "index", "index"), attrs={"cb": "int"},
          optional_attrs={"pad": "float"}, context="device", rule="cb"),
        S("tt_dm", "write_tile", ("i32", "index", "index"), attrs={"cb": "int"}, context="device", rule="cb"),
        S("tt_dm", "barrier", context="device"),
        # tt_cb
        *(S("tt_cb", n, attrs={"cb": "int", "n": "int"}, context="device", rule="cb")
          for n in ("reserve", "push", "wait", "pop")),
        S("tt_cb", "write_slot", ("tile",), attrs={"cb": "int"}, context="device", rule="cb"),
        S("tt_cb", "read_slot", (), ("tile",), attrs={"cb": "int"}, context="device", rule="cb"),
        # tt_compute
        S("tt_compute", "init", context="device"),
        S("tt_compute", "copy_in", (), ("tile",), attrs={"cb": "int"}, context="device", rule="cb"),
        *(S("tt_compute", n, ("tile", "tile"), ("tile",), context="device")
          for n in ("add_tiles", "sub_tiles", "mul_tiles", "div_tiles")),
        *(S("tt_compute", n, ("tile", "f32"), ("tile",), optional_attrs={"reverse": "int"},
            context="device", rule="scalar_tile")
          for n in ("add_scalar", "sub_scalar", "mul_scalar", "div_scalar")),
        S("tt_compute", "pack_out", ("tile",), attrs={"cb": "int"}, context="device", rule="cb"),
    ]
    return specs


def register_builtin_dialects() -> DialectRegistry:
    return DialectRegistry(_specs())


def verify_function(f: Function, registry: DialectRegistry, module=None) -> list[Diagnostic]:
    spec = registry.lookup("func", "func")
    loc = Location(f.name, len(f.body.blocks) - 1, len(f.body.blocks[-1].ops) if f.body.blocks else 0)
    return [error(f"func.func: {m}", loc) for m in _RULES[spec.rule](f, module)]
