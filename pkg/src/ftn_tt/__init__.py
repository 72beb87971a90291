"""Fortran offload loops -> multi-level IR -> simulated Tensix-style accelerator."""

from .config import DeviceConfig
from .dialects import DialectRegistry, OpSpec, register_builtin_dialects
from .frontend import compile_source, parse_directive, parse_fortran
from .ir import Module, parse_module, print_module, structurally_equal, verify, walk_replace
from .passes import PassPipeline, compute_tile_partition, match_elementwise, run_pipeline

__all__ = [
    "DeviceConfig", "DialectRegistry", "OpSpec", "register_builtin_dialects", "compile_source",
    "parse_directive", "parse_fortran", "Module", "parse_module", "print_module",
    "structurally_equal", "verify", "walk_replace", "PassPipeline", "compute_tile_partition",
    "match_elementwise", "run_pipeline",
]
