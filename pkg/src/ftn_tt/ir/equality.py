"""Structural equality: graph shape, types and attributes; value spelling ignored."""

from __future__ import annotations

from .core import Function, Module, Operation, Region, Value


def _attr_key(v):
    if isinstance(v, (list, tuple)):
        return ("array", tuple(_attr_key(x) for x in v))
    if isinstance(v, dict):
        return ("map", tuple(sorted((k, _attr_key(x)) for k, x in v.items())))
    if isinstance(v, float):
        # distinguish -0.0 and compare NaNs by bit pattern
        return ("float", v.hex())
    return (type(v).__name__, v)


class _Canon:
    def __init__(self):
        self.ids: dict[Value, int] = {}

    def define(self, v: Value) -> int:
        self.ids[v] = len(self.ids)
        return self.ids[v]

    def use(self, v: Value):
        # values from outside the walked unit compare as unresolved
        return self.ids.get(v, ("free", id(v)))

    def region(self, region: Region) -> tuple:
        out = []
        for block in region.blocks:
            args = tuple((self.define(a), a.type) for a in block.args)
            out.append((args, tuple(self.op(op) for op in block.ops)))
        return tuple(out)

    def op(self, op: Operation) -> tuple:
        operands = tuple(self.use(v) for v in op.operands)
        results = tuple((self.define(r), r.type) for r in op.results)
        attrs = _attr_key(op.attributes)
        regions = tuple(self.region(r) for r in op.regions)
        return (op.name, operands, results, attrs, regions)

    def function(self, f: Function) -> tuple:
        self.ids = {}
        return (f.name, f.result_type, _attr_key(f.attributes), self.region(f.body))


def canonical_form(m: Module) -> tuple:
    c = _Canon()
    return (_attr_key(m.attributes), tuple(c.function(f) for f in m.functions))


def structurally_equal(a: Module, b: Module) -> bool:
    return canonical_form(a) == canonical_form(b)
