from .core import (
    Block,
    Builder,
    Diagnostic,
    DiagnosticError,
    Function,
    Location,
    Module,
    Operation,
    Region,
    Value,
    clone_module,
    location_of,
)
from .equality import structurally_equal
from .parser import parse_module, parse_type
from .printer import print_function, print_module
from .rewrite import Replacement, walk_replace
from .types import F32, I1, I32, INDEX, NONE, TILE, MemRefType, ScalarType, SymbolRef, TileType, Type, memref
from .verify import verify

__all__ = [
    "Block", "Builder", "Diagnostic", "DiagnosticError", "Function", "Location", "Module",
    "Operation", "Region", "Value", "clone_module", "location_of", "structurally_equal",
    "parse_module", "parse_type", "print_function", "print_module", "Replacement",
    "walk_replace", "F32", "I1", "I32", "INDEX", "NONE", "TILE", "MemRefType", "ScalarType",
    "SymbolRef", "TileType", "Type", "memref", "verify",
]
