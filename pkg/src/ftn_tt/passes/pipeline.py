from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from ..config import DeviceConfig
from ..dialects import DialectRegistry, register_builtin_dialects
from ..ir.core import DiagnosticError, Module, error
from ..ir.printer import print_module
from ..ir.verify import verify
from .ftn_to_std import pass_ftn_to_std
from .host_to_runtime import pass_host_to_runtime
from .offload_to_tt import pass_offload_to_tt

PASSES: dict[str, Callable] = {
    "ftn_to_std": pass_ftn_to_std,
    "offload_to_tt": pass_offload_to_tt,
    "host_to_runtime": pass_host_to_runtime,
}
DEFAULT_PIPELINE = ("ftn_to_std", "offload_to_tt", "host_to_runtime")


@dataclass
class PassPipeline:
    passes: list[str] = field(default_factory=lambda: list(DEFAULT_PIPELINE))
    dump_after: set[str] = field(default_factory=set)  # pass names, or {"all"}

    def dumps(self, name: str) -> bool:
        return "all" in self.dump_after or name in self.dump_after


class PipelineError(DiagnosticError):
    def __init__(self, pass_name: str, diagnostics):
        self.pass_name = pass_name
        super().__init__(diagnostics)


@dataclass
class PipelineResult:
    module: Module
    dumps: dict[str, str]  # pass name -> printed module
    stages: list[tuple[str, Module]]  # input plus the module after every pass


def run_pipeline(
    m: Module,
    pipeline: PassPipeline | None = None,
    cfg: DeviceConfig | None = None,
    registry: DialectRegistry | None = None,
) -> PipelineResult:
    """Apply passes in order, verifying the module after each one."""
    pipeline = pipeline or PassPipeline()
    cfg = cfg or DeviceConfig()
    registry = registry or register_builtin_dialects()
    unknown = [p for p in pipeline.passes if p not in PASSES]
    unknown += [p for p in pipeline.dump_after if p != "all" and p not in PASSES]
    if unknown:
        raise PipelineError("", [error(f"unknown pass '{p}' (known: {', '.join(PASSES)})") for p in unknown])
    stages = [("input", m)]
    dumps: dict[str, str] = {}
    for name in pipeline.passes:
        try:
            m = PASSES[name](m, cfg)
        except DiagnosticError as e:
            raise PipelineError(name, e.diagnostics) from None
        diags = verify(m, registry)
        if diags:
            raise PipelineError(name, [error(f"after {name}: {d.message}", d.location) for d in diags])
        stages.append((name, m))
        if pipeline.dumps(name):
            dumps[name] = print_module(m)
    return PipelineResult(m, dumps, stages)
