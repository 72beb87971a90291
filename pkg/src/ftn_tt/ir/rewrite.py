"""Post-order match-and-replace over a module."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

from .core import Block, DiagnosticError, Module, Operation, Region, Value, error, location_of


@dataclass
class Replacement:
    """Rewriter output with an explicit mapping for the matched op's results."""

    ops: list[Operation]
    values: list[Value] = field(default_factory=list)


RewriteResult = Sequence[Operation] | Replacement


def _default_values(op: Operation, new_ops: list[Operation]) -> list[Value]:
    if not op.results:
        return []
    if not new_ops:
        raise DiagnosticError(error(f"rewrite of {op.name} erased results still needed", location_of(op)))
    last = new_ops[-1]
    if [r.type for r in last.results] != [r.type for r in op.results]:
        raise DiagnosticError(
            error(f"rewrite of {op.name} does not preserve result types", location_of(op))
        )
    return list(last.results)


class _Walker:
    def __init__(self, matcher, rewriter):
        self.matcher = matcher
        self.rewriter = rewriter
        self.remap: dict[Value, Value] = {}

    def region(self, region: Region) -> None:
        for block in region.blocks:
            self.block(block)

    def block(self, block: Block) -> None:
        new_ops: list[Operation] = []
        for op in list(block.ops):
            op.operands = [self.remap.get(v, v) for v in op.operands]
            for r in op.regions:
                self.region(r)
            if not self.matcher(op):
                new_ops.append(op)
                continue
            out = self.rewriter(op)
            if isinstance(out, Replacement):
                ops, values = list(out.ops), list(out.values)
                if len(values) != len(op.results):
                    raise DiagnosticError(error(
                        f"rewrite of {op.name} maps {len(values)} values for {len(op.results)} results",
                        location_of(op)))
            else:
                ops = list(out)
                values = _default_values(op, ops)
            for old, new in zip(op.results, values):
                self.remap[old] = new
            new_ops.extend(ops)
        block.ops = []
        for op in new_ops:
            block.append(op)


def walk_replace(
    m: Module,
    matcher: Callable[[Operation], bool],
    rewriter: Callable[[Operation], RewriteResult],
    registry=None,
) -> Module:
    """Return a rewritten copy of `m`; `m` itself is never modified.

    Every matched op is replaced exactly once by the ops the rewriter returns.
    Nested regions are rewritten before their owning op. Raises DiagnosticError
    if the rewritten module has dangling value uses.
    """
    out = m.clone()
    w = _Walker(matcher, rewriter)
    for f in out.functions:
        w.region(f.body)
    from .verify import _check_region

    diags = []
    for f in out.functions:
        _check_region(f.body, set(), _ScopeOnly(registry), out, diags)
    dangling = [d for d in diags if "not in scope" in d.message]
    if dangling:
        raise DiagnosticError(dangling)
    return out


class _ScopeOnly:
    """Registry facade that reports isolation but runs no per-op checks."""

    scope_only = True

    def __init__(self, registry):
        self.registry = registry

    def lookup(self, dialect, opname):
        if self.registry is None:
            return None
        return self.registry.lookup(dialect, opname)

    def verify_op(self, op, spec, module):
        return []
