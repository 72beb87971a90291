"""Sequential interpreter for func/arith/scf/memref (the correctness oracle).

f32 values are numpy float32 scalars so every operation rounds once, exactly
as IEEE single precision would; nothing is ever fused.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from ..dialects import KERNEL_KIND_ATTR
from ..frontend.lower import ARG_NAMES_ATTR
from ..ir.core import Block, DiagnosticError, Function, Module, Operation, error, location_of
from ..ir.types import MemRefType, ScalarType


class ExecutionError(DiagnosticError):
    pass


def _fail(op: Operation, msg: str) -> ExecutionError:
    return ExecutionError(error(f"{op.name}: {msg}", location_of(op)))


def wrap_i32(x: int) -> int:
    return (x + 2**31) % 2**32 - 2**31


def _int_result(op: Operation, x: int) -> int:
    return wrap_i32(x) if op.results[0].type.kind == "i32" else x


def _divsi(op, a, b):
    if b == 0:
        raise _fail(op, "integer division by zero")
    q = abs(a) // abs(b)
    return _int_result(op, q if (a < 0) == (b < 0) else -q)


def _check_index(op: Operation, ref: np.ndarray, i: int) -> int:
    if not 0 <= i < ref.shape[0]:
        raise _fail(op, f"index {i} out of bounds for memref of {ref.shape[0]} element(s)")
    return i


_CMP = {
    "eq": lambda a, b: a == b, "ne": lambda a, b: a != b,
    "slt": lambda a, b: a < b, "sle": lambda a, b: a <= b,
    "sgt": lambda a, b: a > b, "sge": lambda a, b: a >= b,
}


def _dtype(t) -> type:
    return np.float32 if t.kind == "f32" else np.int64


def _alloc(op, *sizes):
    t = op.results[0].type
    it = iter(sizes)
    shape = [next(it) if d is None else d for d in t.shape]
    return np.zeros(shape, dtype=_dtype(t.element))


def _constant(op):
    t = op.results[0].type
    v = op.attributes["value"]
    return np.float32(v) if t.kind == "f32" else int(v)


# op name -> f(op, *operand values) -> result (or None)
PURE_OPS: dict[str, Callable] = {
    "arith.constant": _constant,
    "arith.addf": lambda op, a, b: a + b,
    "arith.subf": lambda op, a, b: a - b,
    "arith.mulf": lambda op, a, b: a * b,
    "arith.divf": lambda op, a, b: a / b,
    "arith.addi": lambda op, a, b: _int_result(op, a + b),
    "arith.muli": lambda op, a, b: _int_result(op, a * b),
    "arith.divsi": _divsi,
    "arith.cmpi": lambda op, a, b: int(_CMP[op.attributes["predicate"]](a, b)),
    "arith.index_cast": lambda op, a: _int_result(op, int(a)),
    "memref.load": lambda op, ref, i: ref[_check_index(op, ref, i)],
    "memref.dim": lambda op, ref, d: int(ref.shape[d]),
    "memref.alloc": _alloc,
}


def _store(op, value, ref, i):
    ref[_check_index(op, ref, i)] = value


PURE_OPS["memref.store"] = _store


def bind_arguments(f: Function, inputs: dict) -> list:
    """Convert named inputs to argument values; arrays are copied."""
    names = f.attributes.get(ARG_NAMES_ATTR) or [f"arg{i}" for i in range(len(f.args))]
    values = []
    for name, a in zip(names, f.args):
        if name not in inputs:
            raise DiagnosticError(error(f"missing binding for '{name}' (argument of @{f.name})"))
        v = inputs[name]
        t = a.type
        if isinstance(t, MemRefType):
            arr = np.array(v, dtype=_dtype(t.element)).reshape(-1)
            if t.shape[0] is not None and arr.shape[0] != t.shape[0]:
                raise DiagnosticError(error(f"binding '{name}' needs {t.shape[0]} element(s), got {arr.shape[0]}"))
            values.append(arr)
        elif isinstance(t, ScalarType) and t.kind == "f32":
            values.append(np.float32(v))
        else:
            if float(v) != int(v):
                raise DiagnosticError(error(f"binding '{name}' must be an integer"))
            values.append(wrap_i32(int(v)) if t.kind == "i32" else int(v))
    return values


def argument_names(f: Function) -> list[str]:
    return list(f.attributes.get(ARG_NAMES_ATTR) or [f"arg{i}" for i in range(len(f.args))])


class Interpreter:
    """Runs host-side code. ``call_hook(name, op, args)`` handles calls to
    symbols that are not functions of the module (the runtime ABI)."""

    def __init__(self, module: Module, call_hook: Callable | None = None):
        self.module = module
        self.call_hook = call_hook

    def call(self, f: Function, args: list):
        env = dict(zip(f.args, args))
        with np.errstate(all="ignore"):
            return self.block(f.entry, env)

    def block(self, block: Block, env: dict):
        for op in block.ops:
            name = op.name
            fn = PURE_OPS.get(name)
            if fn is not None:
                r = fn(op, *[env[v] for v in op.operands])
                if op.results:
                    env[op.results[0]] = r
            elif name == "scf.for":
                lb, ub, step = (env[v] for v in op.operands)
                body = op.regions[0].block
                iv = body.args[0]
                for i in range(lb, ub, step):
                    env[iv] = i
                    self.block(body, env)
            elif name == "offload.target":
                # the reference semantics of a target region: run it in place
                inner = op.regions[0].block
                self.block(inner, {**env, **dict(zip(inner.args, (env[v] for v in op.operands)))})
            elif name == "func.call":
                callee = op.attributes["callee"].name
                args = [env[v] for v in op.operands]
                target = self.module.get(callee)
                if target is not None:
                    r = self.call(target, args)
                elif self.call_hook is not None:
                    r = self.call_hook(callee, op, args)
                else:
                    raise _fail(op, f"no implementation for @{callee}")
                if op.results:
                    env[op.results[0]] = r
            elif name == "func.return":
                return env[op.operands[0]] if op.operands else None
            elif name in ("scf.yield",):
                return None
            else:
                raise _fail(op, "cannot be interpreted on the host")
        return None


def host_functions(m: Module) -> list[Function]:
    return [f for f in m.functions if KERNEL_KIND_ATTR not in f.attributes]


def entry_function(m: Module, name: str | None = None) -> Function | None:
    if name is not None:
        return m[name]
    hosts = host_functions(m)
    return hosts[0] if hosts else None


def interpret_std(m: Module, inputs: dict, entry: str | None = None) -> dict[str, np.ndarray]:
    """Run the entry function sequentially; returns every array argument by name."""
    f = entry_function(m, entry)
    if f is None:
        return {}
    args = bind_arguments(f, inputs)
    Interpreter(m).call(f, args)
    return {n: a for n, a in zip(argument_names(f), args) if isinstance(a, np.ndarray)}
