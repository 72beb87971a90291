"""AST -> ftn + offload dialect IR."""

from __future__ import annotations

import numpy as np

from ..ir.core import Block, Builder, Function, Module, Operation, Region, Value
from ..ir.types import F32, I32, INDEX, memref
from .fortran import ArrayRef, Assign, BinOp, FortranAst, Loop, Neg, Num, Subroutine, Var, expr_refs

ARG_NAMES_ATTR = "arg_names"

_BINOPS = {"+": "arith.addf", "-": "arith.subf", "*": "arith.mulf", "/": "arith.divf"}


def f32_round(x: float) -> float:
    return float(np.float32(x))


def _written_scalars(sub: Subroutine) -> set[str]:
    out = set()
    for s in _stmts(sub.body):
        if isinstance(s, Assign) and isinstance(s.target, Var):
            out.add(s.target.name)
    return out


def _stmts(body):
    for s in body:
        yield s
        if isinstance(s, Loop):
            yield from _stmts(s.body)


def _usage(body) -> tuple[list[str], set[str]]:
    """Names referenced (first-use order) and names written."""
    used: list[str] = []
    written: set[str] = set()

    def use(name):
        if name not in used:
            used.append(name)

    for s in _stmts(body):
        if isinstance(s, Loop):
            for b in (s.lb, s.ub):
                if isinstance(b, str):
                    use(b)
        else:
            for leaf in expr_refs(s.value):
                if isinstance(leaf, (Var, ArrayRef)):
                    use(leaf.name)
            use(s.target.name)
            written.add(s.target.name)
    return used, written


class _Lowering:
    def __init__(self, sub: Subroutine):
        self.sub = sub
        self.by_ref = _written_scalars(sub)

    def arg_type(self, name: str):
        p = self.sub.param(name)
        if p.kind == "integer":
            return I32
        if p.is_array:
            return memref(None)
        if name in self.by_ref:
            return memref(1)
        return F32

    def function(self) -> Function:
        sub = self.sub
        names = [p.name for p in sub.params]
        f = Function(sub.name, [self.arg_type(n) for n in names], attributes={ARG_NAMES_ATTR: names})
        env = dict(zip(names, f.args))
        b = Builder(f.entry)
        body = Block()
        b.op("ftn.subroutine", attributes={"name": sub.name}, regions=[Region([body])])
        self.statements(Builder(body), sub.body, env, {})
        body.append(Operation("ftn.end"))
        b.op("func.return")
        return f

    def statements(self, b: Builder, stmts, env: dict[str, Value], ivs: dict[str, Value]) -> None:
        for s in stmts:
            if isinstance(s, Loop):
                if s.directive is not None:
                    self.offload(b, s, env, ivs)
                else:
                    self.loop(b, s, env, ivs)
            else:
                self.assign(b, s, env, ivs)

    def bound(self, b: Builder, v, env) -> Value:
        if isinstance(v, int):
            return b.value("arith.constant", [], INDEX, {"value": v})
        return b.value("arith.index_cast", [env[v]], INDEX)

    def loop(self, b: Builder, s: Loop, env, ivs) -> None:
        lb = self.bound(b, s.lb, env)
        ub = self.bound(b, s.ub, env)
        step = b.value("arith.constant", [], INDEX, {"value": s.step})
        body = Block([INDEX])
        b.op("ftn.do_loop", [lb, ub, step], regions=[Region([body])])
        self.statements(Builder(body), s.body, env, {**ivs, s.var: body.args[0]})
        body.append(Operation("ftn.end"))

    def offload(self, b: Builder, s: Loop, env, ivs) -> None:
        clauses = s.directive
        used, written = _usage([s])
        explicit = clauses.map_to + clauses.map_from + clauses.map_tofrom
        names = [p.name for p in self.sub.params if p.name in used or p.name in explicit]
        operands = [env[n] for n in names]
        maps = {"to": [], "from": [], "tofrom": []}
        for i, n in enumerate(names):
            if not isinstance(operands[i].type, type(memref(None))):
                continue  # scalars travel by value
            kind = clauses.map_kind_of(n)
            if kind is None:
                kind = "tofrom" if n in written else "to"
            maps[kind].append(i)
        attrs = {
            "num_teams": clauses.num_teams,
            "map_to": maps["to"],
            "map_from": maps["from"],
            "map_tofrom": maps["tofrom"],
        }
        if clauses.num_threads is not None:
            attrs["num_threads"] = clauses.num_threads
        if clauses.simdlen is not None:
            attrs["simdlen"] = clauses.simdlen
        block = Block([v.type for v in operands])
        b.op("offload.target", operands, attributes=attrs, regions=[Region([block])])
        inner_env = dict(zip(names, block.args))
        self.loop(Builder(block), s, inner_env, {})

    def assign(self, b: Builder, s: Assign, env, ivs) -> None:
        value = self.expr(b, s.value, env, ivs)
        t = s.target
        if isinstance(t, ArrayRef):
            b.op("ftn.store", [value, env[t.name], ivs[t.index]])
        else:
            one = b.value("arith.constant", [], INDEX, {"value": 1})
            b.op("ftn.store", [value, env[t.name], one])

    def expr(self, b: Builder, e, env, ivs) -> Value:
        if isinstance(e, Num):
            return b.value("arith.constant", [], F32, {"value": f32_round(e.value)})
        if isinstance(e, ArrayRef):
            return b.value("ftn.load", [env[e.name], ivs[e.index]], F32)
        if isinstance(e, Var):
            if e.name in self.by_ref:
                one = b.value("arith.constant", [], INDEX, {"value": 1})
                return b.value("ftn.load", [env[e.name], one], F32)
            return env[e.name]
        if isinstance(e, Neg):
            x = self.expr(b, e.operand, env, ivs)
            m1 = b.value("arith.constant", [], F32, {"value": -1.0})
            return b.value("arith.mulf", [m1, x], F32)
        if isinstance(e, BinOp):
            lhs = self.expr(b, e.lhs, env, ivs)
            rhs = self.expr(b, e.rhs, env, ivs)
            return b.value(_BINOPS[e.op], [lhs, rhs], F32)
        raise TypeError(f"unexpected expression node {e!r}")


def lower_ast(ast: FortranAst) -> Module:
    return Module([_Lowering(sub).function() for sub in ast.subroutines])
