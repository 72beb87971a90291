from __future__ import annotations

from .core import Diagnostic, Location, Module, Operation, Region, Value, error, location_of


def _check_region(region: Region, visible: set[Value], registry, module, diags: list[Diagnostic]) -> None:
    for block in region.blocks:
        added: list[Value] = []
        for a in block.args:
            visible.add(a)
            added.append(a)
        for op in block.ops:
            _check_op(op, visible, registry, module, diags)
            for r in op.results:
                visible.add(r)
                added.append(r)
        for v in added:
            visible.discard(v)


def _check_op(op: Operation, visible: set[Value], registry, module, diags: list[Diagnostic]) -> None:
    for i, v in enumerate(op.operands):
        if v not in visible:
            diags.append(error(f"{op.name}: operand #{i} uses a value that is not in scope", location_of(op)))
    spec = registry.lookup(op.dialect, op.opname)
    if spec is None:
        if not getattr(registry, "scope_only", False):
            diags.append(error(f"unknown operation {op.name}", location_of(op)))
    else:
        diags.extend(registry.verify_op(op, spec, module))
    isolated = spec is not None and spec.isolated
    for region in op.regions:
        _check_region(region, set() if isolated else visible, registry, module, diags)


def verify(m: Module, registry) -> list[Diagnostic]:
    """Structural and per-op verification; diagnostics come back in program order."""
    diags: list[Diagnostic] = []
    seen: set[str] = set()
    for f in m.functions:
        if f.name in seen:
            diags.append(error(f"duplicate function symbol @{f.name}"))
        seen.add(f.name)
    for f in m.functions:
        if not f.body.blocks:
            diags.append(error("function has no entry block", Location(f.name, 0, 0)))
            continue
        _check_region(f.body, set(), registry, m, diags)
        diags.extend(registry.verify_function(f, m))
    return diags
