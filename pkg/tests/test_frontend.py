import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import NEGATIVE, POSITIVE, SAXPY
from fortgen import random_program
from ftn_tt.dialects import register_builtin_dialects
from ftn_tt.frontend import compile_source, lower_ast, parse_directive, parse_fortran
from ftn_tt.frontend.fortran import ArrayRef, Assign, BinOp, Loop, Neg, Num, Var
from ftn_tt.ir import DiagnosticError, MemRefType, verify
from ftn_tt.passes import run_pipeline

REG = register_builtin_dialects()


def _targets(m):
    return [op for op in m.walk() if op.name == "offload.target"]


def _maps_by_name(m, op):
    """map lists of an offload.target translated from operand indices to names."""
    f = m.functions[0]
    names = dict(zip(f.args, f.attributes["arg_names"]))
    return {k: [names[op.operands[i]] for i in op.attributes[f"map_{k}"]] for k in ("to", "from", "tofrom")}


# -- parse_fortran ------------------------------------------------------------


def test_saxpy_ast():
    ast = parse_fortran(SAXPY.read_text())
    (sub,) = ast.subroutines
    assert sub.name == "saxpy"
    assert [(p.name, p.kind, p.is_array) for p in sub.params] == [
        ("a", "real", False), ("x", "real", True), ("y", "real", True), ("n", "integer", False)]
    (loop,) = ast.loops
    assert (loop.var, loop.lb, loop.ub, loop.step) == ("i", 1, "n", 1)
    (stmt,) = loop.body
    assert stmt == Assign(
        ArrayRef("y", "i"), BinOp("+", BinOp("*", Var("a"), ArrayRef("x", "i")), ArrayRef("y", "i")), 13)
    c = loop.directive
    assert (c.num_teams, c.num_threads, c.simdlen) == (1, 20, 32)
    assert ast.directives == [(10, c)]


def test_empty_subroutine():
    ast = parse_fortran("subroutine nothing()\nend subroutine nothing\n")
    assert len(ast.subroutines) == 1 and ast.loops == []


def test_unary_minus_binds_looser_than_product():
    src = """subroutine f(x, y, n)
  real, dimension(n) :: x, y
  integer :: n
  integer :: i
  do i = 1, n
    y(i) = -x(i) * 2.0 - (x(i))
  end do
end subroutine
"""
    (stmt,) = parse_fortran(src).loops[0].body
    assert stmt.value == BinOp("-", Neg(BinOp("*", ArrayRef("x", "i"), Num(2.0))), ArrayRef("x", "i"))


def test_nested_loops_and_fixed_bounds():
    src = """subroutine f(x, n)
  real, dimension(n) :: x
  integer :: n
  integer :: i, j
  do j = 1, 3
    do i = 2, n, 2
      x(i) = x(i) + 1.0
    end do
  end do
end subroutine
"""
    (outer,) = parse_fortran(src).subroutines[0].body
    assert isinstance(outer, Loop) and (outer.lb, outer.ub) == (1, 3)
    (inner,) = outer.body
    assert (inner.var, inner.lb, inner.ub, inner.step) == ("i", 2, "n", 2)


_HEAD = """subroutine f(x, y, n)
  real, dimension(n) :: x, y
  integer, intent(in) :: n
  integer :: i
"""


@pytest.mark.parametrize(
    "body, message, line, column",
    [
        ("  !$omp target parallel do\n  do i = 1, n\n    y(i+1) = x(i)\n  end do\n  !$omp end target\n",
         "index must be induction variable", 7, 5),
        ("  do i = 1, n\n    y(i) = x(n)\n  end do\n", "index must be induction variable", 6, 12),
        ("  write(*,*) x\n", "unsupported statement kind 'write'", 5, 1),
        ("  !$omp target parallel do\n  do i = 1, n\n    y(i) = x(i)\n  end do\n", "unmatched directive", 5, 1),
        ("  !$omp end target\n", "unmatched directive", 5, 1),
        ("  do i = 1, n\n    y(i) = x(i) ** 2\n  end do\n", "exponentiation is not supported", 6, 17),
        ("  do i = 1, n\n    y(i) = q\n  end do\n", "undeclared variable 'q'", 6, 12),
        ("  do k = 1, n\n  end do\n", "loop variable 'k' must be a declared local integer", 5, 1),
        ("  do i = 1, n\n    y(i) = x(i) +\n  end do\n", "expected an expression", 6, 18),
    ],
)
def test_parse_errors_carry_line_numbers(body, message, line, column):
    with pytest.raises(DiagnosticError) as e:
        parse_fortran(_HEAD + body + "end subroutine\n")
    (d,) = e.value.diagnostics
    assert message in d.message
    assert (d.line, d.column) == (line, column)


def test_continuation_and_doubled_sentinel():
    ast = parse_fortran(SAXPY.read_text())
    assert ast.loops[0].directive.constructs == ("target", "parallel", "do", "simd")


# -- parse_directive ----------------------------------------------------------


def test_directive_saxpy_clauses():
    c = parse_directive("target parallel do simd num_threads(20) simdlen(32)")
    assert (c.num_teams, c.num_threads, c.simdlen) == (1, 20, 32)
    assert c.map_to == c.map_from == c.map_tofrom == []


def test_directive_num_teams():
    c = parse_directive("!$omp target teams distribute parallel do num_teams(2)")
    assert (c.num_teams, c.num_threads, c.simdlen) == (2, None, None)


def test_directive_doubled_omp_is_normalized():
    a = parse_directive("!$omp omp target parallel do simd num_threads(20) simdlen(32)")
    b = parse_directive("!$omp target parallel do simd num_threads(20) simdlen(32)")
    assert a == b


def test_directive_maps():
    c = parse_directive("target map(to: x, w) map(from: z) map(y)")
    assert (c.map_to, c.map_from, c.map_tofrom) == (["x", "w"], ["z"], ["y"])
    assert c.map_kind_of("w") == "to" and c.map_kind_of("q") is None


@pytest.mark.parametrize(
    "text, message",
    [
        ("target parallel do simdlen(0)", "clause 'simdlen' must be positive, got 0"),
        ("target num_teams(-3)", "clause 'num_teams' must be positive"),
        ("target num_threads(x)", "needs an integer argument"),
        ("target simdlen", "clause 'simdlen' needs an argument"),
        ("target collapse(2)", "unknown clause 'collapse'"),
        ("parallel do", "only 'target' directives are supported"),
        ("target map(alloc: x)", "unsupported map type 'alloc'"),
        ("target map(to: x) map(from: x)", "variable 'x' appears in more than one map clause"),
        ("target num_teams(2) num_teams(3)", "clause 'num_teams' given twice"),
    ],
)
def test_directive_errors(text, message):
    with pytest.raises(DiagnosticError, match=message.replace("(", r"\(").replace(")", r"\)")):
        parse_directive(text, line=4)


# -- lower_ast ----------------------------------------------------------------


def test_lower_saxpy():
    m = lower_ast(parse_fortran(SAXPY.read_text()))
    (f,) = m.functions
    assert f.name == "saxpy" and all(isinstance(f.args[i].type, MemRefType) for i in (1, 2))
    (t,) = _targets(m)
    a = t.attributes
    assert (a["num_teams"], a["num_threads"], a["simdlen"]) == (1, 20, 32)
    assert _maps_by_name(m, t) == {"to": ["x"], "from": [], "tofrom": ["y"]}
    loops = [op for op in t.regions[0].walk() if op.name == "ftn.do_loop"]
    assert len(loops) == 1
    assert verify(m, REG) == []


def test_lower_host_loop_has_no_target():
    m = compile_source((SAXPY.parent / "host_loop.f90").read_text())
    assert _targets(m) == []
    assert [op.name for op in m.walk()].count("ftn.do_loop") == 1


def test_lower_two_regions_in_program_order():
    m = compile_source((SAXPY.parent / "two_regions.f90").read_text())
    first, second = _targets(m)
    assert (first.attributes["num_teams"], second.attributes["num_teams"]) == (2, 3)
    assert _maps_by_name(m, first) == {"to": ["x"], "from": [], "tofrom": ["y"]}
    assert _maps_by_name(m, second) == {"to": ["x", "y"], "from": ["z"], "tofrom": []}


@pytest.mark.parametrize("path", POSITIVE, ids=lambda p: p.stem)
def test_corpus_lowers_and_verifies(path):
    m = compile_source(path.read_text())
    assert verify(m, REG) == []


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_map_inference_property(seed):
    p = random_program(seed)
    m = compile_source(p.source)
    (t,) = _targets(m)
    maps = _maps_by_name(m, t)
    read_only = sorted(a for a in p.arrays if a != p.target)
    assert sorted(maps["to"]) == read_only
    if p.explicit_from:
        assert maps["from"] == [p.target] and maps["tofrom"] == []
    else:
        assert maps["tofrom"] == [p.target] and maps["from"] == []
    # every referenced array is in exactly one list
    listed = maps["to"] + maps["from"] + maps["tofrom"]
    assert sorted(listed) == sorted(p.arrays)
    assert verify(m, REG) == []


# -- negative corpus ----------------------------------------------------------

NEGATIVE_EXPECTED = {
    "bad_index": ("index must be induction variable", 9),
    "implicit": ("implicit typing", 1),
    "statement": ("unsupported statement kind 'print'", 7),
    "simdlen_zero": ("clause 'simdlen' must be positive", 6),
    "unmatched": ("unmatched directive: missing '!$omp end target ...'", 6),
    # these parse; later stages reject them
    "reduction": ("unsupported offload body: scalar updated inside the loop (reduction)", None),
    "too_many_teams": ("num_teams(200) exceeds the 128 cores of the device", None),
    "simdlen_48": ("simdlen(48) does not divide the tile width 1024", None),
}


def test_negative_table_covers_corpus():
    assert sorted(NEGATIVE_EXPECTED) == sorted(p.stem for p in NEGATIVE)


@pytest.mark.parametrize("path", NEGATIVE, ids=lambda p: p.stem)
def test_negative_corpus(path):
    message, line = NEGATIVE_EXPECTED[path.stem]
    with pytest.raises(DiagnosticError) as e:
        run_pipeline(compile_source(path.read_text()))
    d = e.value.diagnostics[0]
    assert message in d.message
    if line is None:
        assert d.location is not None
    else:
        assert d.line == line and d.column >= 1
