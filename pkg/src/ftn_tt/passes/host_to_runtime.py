"""tt_host ops -> ``func.call @tt_rt_<op>`` against the runtime ABI."""

from __future__ import annotations

from ..ir.core import Module, Operation
from ..ir.rewrite import walk_replace
from ..ir.types import SymbolRef


def _to_call(op: Operation) -> list[Operation]:
    attrs = {"callee": SymbolRef(f"tt_rt_{op.opname}")}
    if "kernel" in op.attributes:
        attrs["kernel"] = op.attributes["kernel"]
    return [Operation("func.call", op.operands, [r.type for r in op.results], attrs)]


def pass_host_to_runtime(m: Module, cfg=None) -> Module:
    if not any(op.dialect == "tt_host" for op in m.walk()):
        return m.clone()
    return walk_replace(m, lambda op: op.dialect == "tt_host", _to_call)
