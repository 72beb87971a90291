"""Recognise an offload region whose loop body is a pure elementwise map."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..ir.core import Block, DiagnosticError, Operation, Value, error, location_of
from ..ir.types import F32, I32, INDEX, MemRefType

_ARITH = {"arith.addf": "add", "arith.subf": "sub", "arith.mulf": "mul", "arith.divf": "div"}


@dataclass(frozen=True)
class Input:
    operand: int


@dataclass(frozen=True)
class Scalar:
    operand: int


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Apply:
    op: str  # add | sub | mul | div
    lhs: object
    rhs: object


def _f32_apply(op: str, a, b):
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    return a / b


@dataclass
class ElementwiseDag:
    inputs: list[tuple[int, str]]  # (operand index, map role) in map-list order
    scalars: list[int]
    output: int
    expr: object
    trip_count: int | tuple[str, int]  # literal, or ("operand", index)
    names: dict[int, str] = field(default_factory=dict)

    @property
    def has_div(self) -> bool:
        def walk(e):
            return isinstance(e, Apply) and (e.op == "div" or walk(e.lhs) or walk(e.rhs))

        return walk(self.expr)

    def evaluate(self, arrays: dict[int, np.ndarray], scalars: dict[int, np.float32], i: int) -> np.float32:
        """Value stored at element i, one f32 rounding per operation."""
        with np.errstate(all="ignore"):
            return self._eval(self.expr, arrays, scalars, i)

    def _eval(self, e, arrays, scalars, i):
        if isinstance(e, Input):
            return np.float32(arrays[e.operand][i])
        if isinstance(e, Scalar):
            return np.float32(scalars[e.operand])
        if isinstance(e, Const):
            return np.float32(e.value)
        return _f32_apply(e.op, self._eval(e.lhs, arrays, scalars, i), self._eval(e.rhs, arrays, scalars, i))


def _unsupported(op: Operation, why: str) -> DiagnosticError:
    return DiagnosticError(error(f"unsupported offload body: {why}", location_of(op)))


def _const(v: Value):
    o = v.owner
    if isinstance(o, Operation) and o.name == "arith.constant":
        return o.attributes["value"]
    return None


def map_roles(target: Operation) -> dict[int, str]:
    roles = {}
    for kind in ("to", "tofrom", "from"):
        for idx in target.attributes.get(f"map_{kind}", []):
            roles[idx] = kind
    return roles


def map_order(target: Operation) -> list[int]:
    """Mapped operand indices: to, then tofrom, then from."""
    a = target.attributes
    return list(a.get("map_to", [])) + list(a.get("map_tofrom", [])) + list(a.get("map_from", []))


def match_elementwise(target: Operation, names: dict[int, str] | None = None) -> ElementwiseDag:
    """Build the elementwise DAG for an ``offload.target`` region.

    Raises DiagnosticError when the loop body is anything but one indexed
    store of an expression over indexed loads, scalars and constants.
    """
    region = target.regions[0]
    if len(region.blocks) != 1:
        raise _unsupported(target, "region must have a single block")
    block = region.block
    arg_index = {a: i for i, a in enumerate(block.args)}
    loops = []
    for op in block.ops:
        if op.name == "scf.for":
            loops.append(op)
        elif op.name not in ("arith.constant", "arith.index_cast"):
            raise _unsupported(op, f"unexpected {op.name} outside the loop")
    if len(loops) != 1:
        raise _unsupported(target, f"expected exactly one loop, found {len(loops)}")
    loop = loops[0]
    lb, ub, step = loop.operands
    if _const(lb) != 0 or _const(step) != 1:
        raise _unsupported(loop, "loop must run from the first element with unit stride")
    trip = _const(ub)
    if trip is None:
        cast = ub.owner
        if (
            not isinstance(cast, Operation)
            or cast.name != "arith.index_cast"
            or cast.operands[0] not in arg_index
            or cast.operands[0].type != I32
        ):
            raise _unsupported(loop, "trip count must be an integer argument or literal")
        trip = ("operand", arg_index[cast.operands[0]])

    body: Block = loop.regions[0].block
    iv = body.args[0]
    for op in body.ops:
        if op.regions:
            raise _unsupported(op, "nested loops and control flow are not supported")
    roles = map_roles(target)
    exprs: dict[Value, object] = {}
    stores = []
    for op in body.ops:
        if op.name == "scf.yield":
            continue
        if op.name == "arith.constant" and op.results[0].type == INDEX:
            continue
        if op.name == "memref.load":
            ref, idx = op.operands
            if ref not in arg_index or idx is not iv:
                raise _unsupported(op, _bad_access(ref))
            i = arg_index[ref]
            if i not in roles:
                raise _unsupported(op, f"array operand {i} is not mapped")
            exprs[op.results[0]] = Input(i)
        elif op.name in _ARITH:
            exprs[op.results[0]] = Apply(_ARITH[op.name], *(_leaf(v, exprs, arg_index, op) for v in op.operands))
        elif op.name == "arith.constant" and op.results[0].type == F32:
            exprs[op.results[0]] = Const(op.attributes["value"])
        elif op.name == "memref.store":
            stores.append(op)
        else:
            raise _unsupported(op, f"{op.name} is not elementwise")
    if len(stores) != 1:
        raise _unsupported(loop, f"expected exactly one array store, found {len(stores)}")
    store = stores[0]
    value, ref, idx = store.operands
    if ref not in arg_index or idx is not iv:
        raise _unsupported(store, _bad_access(ref, "store target must be array-indexed by the loop variable"))
    out = arg_index[ref]
    if roles.get(out) not in ("from", "tofrom"):
        raise _unsupported(store, "store target must be mapped from or tofrom")
    expr = _leaf(value, exprs, arg_index, store)
    used = {e.operand for e in _leaves(expr) if isinstance(e, Input)}
    if not used:
        raise _unsupported(store, "stored value reads no array element")
    inputs = [(i, roles[i]) for i in map_order(target) if i in used]
    scalars = sorted({e.operand for e in _leaves(expr) if isinstance(e, Scalar)})
    return ElementwiseDag(inputs, scalars, out, expr, trip, dict(names or {}))


def _bad_access(ref: Value, default: str = "array access must be indexed by the loop variable") -> str:
    if isinstance(ref.type, MemRefType) and ref.type.shape == (1,):
        return "scalar updated inside the loop (reduction)"
    return default


def _leaf(v: Value, exprs, arg_index, op):
    if v in exprs:
        return exprs[v]
    if v in arg_index and v.type == F32:
        return Scalar(arg_index[v])
    c = _const(v)
    if c is not None and v.type == F32:
        return Const(c)
    raise _unsupported(op, "operand is not an element, scalar or constant")


def _leaves(e):
    if isinstance(e, Apply):
        yield from _leaves(e.lhs)
        yield from _leaves(e.rhs)
    else:
        yield e

