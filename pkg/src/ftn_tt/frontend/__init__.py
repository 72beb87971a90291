from .directives import OffloadClauses, parse_directive
from .fortran import FortranAst, parse_fortran
from .lower import lower_ast


def compile_source(source: str):
    """Fortran text -> ftn/offload module."""
    return lower_ast(parse_fortran(source))


__all__ = ["OffloadClauses", "parse_directive", "FortranAst", "parse_fortran", "lower_ast", "compile_source"]
