"""Parser for the supported Fortran subset.

Free-form source: subroutines with explicit declarations of f32 scalars,
1-D f32 arrays and integer scalars, (nested) do-loops, and elementwise
assignments. ``!$omp target`` directive lines (with ``&`` continuations)
attach to the do-loop that follows them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..ir.core import Diagnostic, DiagnosticError
from .directives import OffloadClauses, is_end_directive, parse_directive

# -- AST -------------------------------------------------------------------


@dataclass
class Param:
    name: str
    kind: str  # "real" | "integer"
    is_array: bool = False


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class ArrayRef:
    name: str
    index: str


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    lhs: object
    rhs: object


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass
class Assign:
    target: Var | ArrayRef
    value: object
    line: int


@dataclass
class Loop:
    var: str
    lb: int | str
    ub: int | str
    step: int
    body: list
    line: int
    directive: OffloadClauses | None = None
    directive_line: int | None = None


@dataclass
class Subroutine:
    name: str
    params: list[Param]
    locals: dict[str, str] = field(default_factory=dict)
    body: list = field(default_factory=list)
    line: int = 0

    def param(self, name: str) -> Param | None:
        for p in self.params:
            if p.name == name:
                return p
        return None

    @property
    def loops(self) -> list[Loop]:
        return [s for s in _walk(self.body) if isinstance(s, Loop)]


@dataclass
class FortranAst:
    subroutines: list[Subroutine]

    @property
    def loops(self) -> list[Loop]:
        return [lp for s in self.subroutines for lp in s.loops]

    @property
    def directives(self) -> list[tuple[int, OffloadClauses]]:
        return [(lp.directive_line, lp.directive) for lp in self.loops if lp.directive is not None]


def _walk(stmts):
    for s in stmts:
        yield s
        if isinstance(s, Loop):
            yield from _walk(s.body)


def expr_refs(e) -> list:
    """Leaves of an expression, left to right."""
    if isinstance(e, BinOp):
        return expr_refs(e.lhs) + expr_refs(e.rhs)
    if isinstance(e, Neg):
        return expr_refs(e.operand)
    return [e]


# -- source lines ------------------------------------------------------------


def _fail(message: str, line: int, column: int = 1) -> DiagnosticError:
    return DiagnosticError(Diagnostic("error", message, None, line, column))


@dataclass
class _Line:
    text: str
    no: int
    directive: bool = False
    indent: int = 0  # columns stripped from the start of the first physical line


def _strip_comment(text: str) -> str:
    i = text.find("!")
    return text if i < 0 else text[:i]


def _logical_lines(source: str) -> list[_Line]:
    out: list[_Line] = []
    pending: _Line | None = None
    for no, raw in enumerate(source.splitlines(), start=1):
        stripped = raw.strip()
        low = stripped.lower()
        if low.startswith("!$omp"):
            body = stripped[5:]
            if body.startswith("&"):
                body = body[1:]
            if pending is not None and pending.directive:
                pending.text += " " + body.strip()
            else:
                if pending is not None:
                    raise _fail("continuation line expected", no)
                pending = _Line("!$omp " + body.strip(), no, True)
        else:
            code = _strip_comment(stripped).strip()
            if not code:
                if pending is not None and not pending.directive:
                    continue
                if pending is not None:
                    raise _fail("directive continuation expected", no)
                continue
            if pending is not None and pending.directive:
                raise _fail("directive continuation expected", no)
            if pending is not None:
                if code.startswith("&"):
                    code = code[1:]
                pending.text += " " + code.strip()
            else:
                pending = _Line(code, no, indent=len(raw) - len(raw.lstrip()))
        if pending.text.rstrip().endswith("&"):
            pending.text = pending.text.rstrip()[:-1].rstrip()
            continue
        out.append(pending)
        pending = None
    if pending is not None:
        raise _fail("source ends inside a continued line", pending.no)
    return out


# -- expressions --------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eEdD][-+]?\d+)?(?:_\w+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>\*\*|[-+*/()=,:]))"
)


def _tokens(text: str, line: int, indent: int = 0) -> list[tuple[str, str, int]]:
    """(kind, text, 1-based source column) triples."""
    toks = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise _fail(f"unexpected character '{text[pos:].strip()[:1]}'", line, indent + pos + 1)
        kind = m.lastgroup
        toks.append((kind, m.group(kind), indent + m.start(kind) + 1))
        pos = m.end()
    return toks


def _parse_number(text: str) -> float:
    text = text.split("_")[0].lower().replace("d", "e")
    return float(text)


class _ExprParser:
    def __init__(self, toks, line: int, sub: Subroutine, loop_vars: list[str]):
        self.toks = toks
        self.i = 0
        self.line = line
        self.sub = sub
        self.loop_vars = loop_vars

    def peek(self):
        if self.i < len(self.toks):
            return self.toks[self.i]
        end = self.toks[-1][2] + len(self.toks[-1][1]) if self.toks else 1
        return None, None, end

    def take(self):
        t = self.peek()
        self.i += 1
        return t

    def expect(self, value: str):
        kind, text, col = self.take()
        if text != value:
            raise _fail(f"expected '{value}'", self.line, col)

    def expr(self):
        # a leading sign binds looser than * and /
        if self.peek()[1] == "-":
            self.take()
            node = Neg(self.term())
        elif self.peek()[1] == "+":
            self.take()
            node = self.term()
        else:
            node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def no_power(self):
        if self.peek()[1] == "**":
            raise _fail("exponentiation is not supported", self.line, self.peek()[2])

    def term(self):
        node = self.unary()
        self.no_power()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
            self.no_power()
        return node

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.primary()

    def primary(self):
        kind, text, col = self.take()
        if text == "**":
            raise _fail("exponentiation is not supported", self.line, col)
        if kind == "num":
            return Num(_parse_number(text))
        if text == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "name":
            return self.reference(text.lower(), col)
        raise _fail("expected an expression" if text is None else f"unexpected '{text}'", self.line, col)

    def reference(self, name: str, col: int):
        p = self.sub.param(name)
        if self.peek()[1] == "(":
            if p is None or not p.is_array:
                raise _fail(f"unsupported function call or undeclared array '{name}'", self.line, col)
            self.take()
            start = self.i
            depth = 1
            while depth:
                kind, text, c = self.take()
                if text is None:
                    raise _fail("unbalanced parentheses", self.line, col)
                depth += {"(": 1, ")": -1}.get(text, 0)
            inner = self.toks[start:self.i - 1]
            if len(inner) != 1 or inner[0][0] != "name" or inner[0][1].lower() not in self.loop_vars:
                raise _fail("index must be induction variable", self.line, col)
            return ArrayRef(name, inner[0][1].lower())
        if p is None:
            if name in self.sub.locals:
                raise _fail(f"loop variable '{name}' cannot be used as a value", self.line, col)
            raise _fail(f"undeclared variable '{name}'", self.line, col)
        if p.is_array:
            raise _fail(f"whole-array reference '{name}' is not supported", self.line, col)
        if p.kind != "real":
            raise _fail(f"integer scalar '{name}' cannot appear in a real expression", self.line, col)
        return Var(name)

    def done(self):
        if self.i != len(self.toks):
            raise _fail(f"unexpected '{self.peek()[1]}'", self.line, self.peek()[2])


# -- statements -----------------------------------------------------------------

_SUB = re.compile(r"subroutine\s+([a-z_]\w*)\s*(?:\((.*)\))?\s*$", re.IGNORECASE)
_END_SUB = re.compile(r"end(\s*subroutine(\s+[a-z_]\w*)?)?\s*$", re.IGNORECASE)
_DO = re.compile(r"do\s+([a-z_]\w*)\s*=\s*([^,]+),([^,]+)(?:,([^,]+))?$", re.IGNORECASE)
_END_DO = re.compile(r"end\s*do\s*$", re.IGNORECASE)
_DECL = re.compile(
    r"(real|integer)(\s*\*\s*4|\s*\(\s*(?:kind\s*=\s*)?4\s*\))?\s*(.*)$", re.IGNORECASE
)
_KEYWORDS = {
    "if", "call", "print", "write", "read", "return", "select", "where", "goto", "go",
    "allocate", "deallocate", "exit", "cycle", "stop", "do", "forall", "else", "elseif",
    "endif", "continue", "contains", "use", "module", "function", "program",
}
_UNSUPPORTED_TYPES = re.compile(r"(double\s+precision|complex|logical|character|type\s*\()", re.IGNORECASE)


class _Parser:
    def __init__(self, lines: list[_Line]):
        self.lines = lines
        self.i = 0

    def at_end(self) -> bool:
        return self.i >= len(self.lines)

    def next(self) -> _Line:
        ln = self.lines[self.i]
        self.i += 1
        return ln

    def program(self) -> FortranAst:
        subs = []
        while not self.at_end():
            ln = self.next()
            m = _SUB.match(ln.text)
            if ln.directive or m is None:
                raise _fail("expected 'subroutine'", ln.no)
            subs.append(self.subroutine(m, ln.no))
        return FortranAst(subs)

    def subroutine(self, m: re.Match, line: int) -> Subroutine:
        name = m.group(1).lower()
        arg_names = [a.strip().lower() for a in (m.group(2) or "").split(",") if a.strip()]
        for a in arg_names:
            if not re.fullmatch(r"[a-z_]\w*", a):
                raise _fail(f"bad dummy argument '{a}'", line)
        if len(set(arg_names)) != len(arg_names):
            raise _fail("duplicate dummy argument", line)
        decls: dict[str, Param] = {}
        locals_: dict[str, str] = {}
        sub = Subroutine(name, [], locals_, [], line)
        # declarations
        while not self.at_end():
            ln = self.lines[self.i]
            if ln.directive:
                break
            low = ln.text.lower()
            if low.replace(" ", "") == "implicitnone":
                self.i += 1
                continue
            if _UNSUPPORTED_TYPES.match(ln.text):
                raise _fail("unsupported type (only real and integer are allowed)", ln.no)
            dm = _DECL.match(ln.text)
            if dm is None or not self._is_decl(dm):
                break
            self.i += 1
            self.declaration(dm, ln.no, arg_names, decls, locals_)
        missing = [a for a in arg_names if a not in decls]
        if missing:
            raise _fail(f"dummy argument '{missing[0]}' has no declaration (implicit typing is not supported)", line)
        sub.params = [decls[a] for a in arg_names]
        sub.body = self.statements(sub, [], terminators=("end_sub",))
        return sub

    @staticmethod
    def _is_decl(dm: re.Match) -> bool:
        rest = dm.group(3)
        # "real = ..." would be an assignment to a variable called real
        return not rest.lstrip().startswith("=")

    def declaration(self, dm, line, arg_names, decls, locals_):
        kind = dm.group(1).lower()
        rest = dm.group(3)
        attrs_text, sep, entities = rest.partition("::")
        if not sep:
            attrs_text, entities = "", rest
        dim_attr = False
        for attr in _split_top(attrs_text.strip().lstrip(",")):
            a = attr.strip().lower()
            if not a:
                continue
            if a.startswith("dimension"):
                inner = a[len("dimension"):].strip()
                if not (inner.startswith("(") and inner.endswith(")")):
                    raise _fail("malformed dimension attribute", line)
                self._check_dims(inner[1:-1], line)
                dim_attr = True
            elif re.fullmatch(r"intent\s*\(\s*(in|out|inout|in\s+out)\s*\)", a) or a == "value":
                continue
            else:
                raise _fail(f"unsupported attribute '{a}'", line)
        for ent in _split_top(entities):
            ent = ent.strip()
            em = re.fullmatch(r"([a-z_]\w*)\s*(?:\((.*)\))?", ent, re.IGNORECASE)
            if em is None:
                raise _fail(f"malformed declaration '{ent}'", line)
            name = em.group(1).lower()
            is_array = dim_attr
            if em.group(2) is not None:
                self._check_dims(em.group(2), line)
                is_array = True
            if name in decls or name in locals_:
                raise _fail(f"'{name}' declared twice", line)
            if name in arg_names:
                if kind == "integer" and is_array:
                    raise _fail("integer arrays are not supported", line)
                decls[name] = Param(name, kind, is_array)
            elif kind == "integer" and not is_array:
                locals_[name] = kind
            else:
                raise _fail(f"local variable '{name}' is not supported (only integer loop variables)", line)

    @staticmethod
    def _check_dims(text: str, line: int) -> None:
        if len(_split_top(text)) != 1:
            raise _fail("multi-dimensional arrays are not supported", line)

    def statements(self, sub: Subroutine, loop_vars: list[str], terminators) -> list:
        body = []
        pending: tuple[OffloadClauses, int] | None = None
        while True:
            if self.at_end():
                raise _fail("missing 'end subroutine'" if "end_sub" in terminators else "missing 'end do'",
                            self.lines[-1].no if self.lines else 1)
            ln = self.next()
            if ln.directive:
                if is_end_directive(ln.text):
                    raise _fail("unmatched directive: end directive without a target region", ln.no)
                if pending is not None:
                    raise _fail("unmatched directive: directive is not followed by a do loop", pending[1])
                words = ln.text[5:].strip().lower().split()
                if words[:1] == ["omp"]:
                    words = words[1:]
                if words[:1] != ["target"]:
                    raise _fail("only 'target' directives are supported", ln.no)
                pending = (parse_directive(ln.text, ln.no), ln.no)
                continue
            text = ln.text
            if _END_SUB.match(text) and not _END_DO.match(text):
                if "end_sub" not in terminators:
                    raise _fail("missing 'end do'", ln.no)
                if pending is not None:
                    raise _fail("unmatched directive: directive is not followed by a do loop", pending[1])
                return body
            if _END_DO.match(text):
                if "end_do" not in terminators:
                    raise _fail("'end do' without a matching 'do'", ln.no)
                if pending is not None:
                    raise _fail("unmatched directive: directive is not followed by a do loop", pending[1])
                return body
            dm = _DO.match(text)
            if dm:
                loop = self.loop(dm, ln.no, sub, loop_vars)
                if pending is not None:
                    loop.directive, loop.directive_line = pending
                    pending = None
                    self.end_directive(loop)
                    for kind in ("to", "from", "tofrom"):
                        for name in getattr(loop.directive, f"map_{kind}"):
                            if sub.param(name) is None:
                                raise _fail(f"map clause names unknown variable '{name}'", loop.directive_line)
                body.append(loop)
                continue
            if pending is not None:
                raise _fail("unmatched directive: directive is not followed by a do loop", pending[1])
            body.append(self.assignment(text, ln.no, sub, loop_vars, ln.indent))

    def end_directive(self, loop: Loop) -> None:
        if self.at_end() or not self.lines[self.i].directive or not is_end_directive(self.lines[self.i].text):
            raise _fail("unmatched directive: missing '!$omp end target ...'", loop.directive_line)
        ln = self.next()
        words = ln.text[5:].strip().lower().split()
        if words[:1] == ["omp"]:
            words = words[1:]
        if words[1:2] != ["target"]:
            raise _fail("unmatched directive: end directive must close a target construct", ln.no)

    def loop(self, dm: re.Match, line: int, sub: Subroutine, loop_vars: list[str]) -> Loop:
        var = dm.group(1).lower()
        if sub.locals.get(var) != "integer":
            raise _fail(f"loop variable '{var}' must be a declared local integer", line)
        if var in loop_vars:
            raise _fail(f"loop variable '{var}' reused in a nested loop", line)
        lb = self.bound(dm.group(2), line, sub)
        ub = self.bound(dm.group(3), line, sub)
        step = 1
        if dm.group(4) is not None:
            s = dm.group(4).strip()
            if not re.fullmatch(r"\d+", s) or int(s) <= 0:
                raise _fail("loop step must be a positive integer literal", line)
            step = int(s)
        body = self.statements(sub, loop_vars + [var], terminators=("end_do",))
        return Loop(var, lb, ub, step, body, line)

    def bound(self, text: str, line: int, sub: Subroutine) -> int | str:
        t = text.strip().lower()
        if re.fullmatch(r"-?\d+", t):
            return int(t)
        p = sub.param(t)
        if p is not None and p.kind == "integer" and not p.is_array:
            return t
        raise _fail(f"loop bound '{text.strip()}' must be an integer literal or integer scalar argument", line)

    def assignment(self, text: str, line: int, sub: Subroutine, loop_vars: list[str], indent: int = 0) -> Assign:
        first = text.split("(")[0].split()[0].lower() if text.split() else ""
        if first in _KEYWORDS:
            raise _fail(f"unsupported statement kind '{first}'", line)
        toks = _tokens(text, line, indent)
        try:
            eq = [t[1] for t in toks].index("=")
        except ValueError:
            raise _fail("unsupported statement kind", line) from None
        if eq == 0 or toks[0][0] != "name":
            raise _fail("unsupported statement kind", line)
        lhs = _ExprParser(toks[:eq], line, sub, loop_vars)
        target = lhs.primary()
        lhs.done()
        if not isinstance(target, (Var, ArrayRef)):
            raise _fail("assignment target must be a variable", line)
        rhs = _ExprParser(toks[eq + 1:], line, sub, loop_vars)
        value = rhs.expr()
        rhs.done()
        return Assign(target, value, line)


def _split_top(text: str) -> list[str]:
    """Split on commas that are not inside parentheses."""
    parts, depth, cur = [], 0, ""
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append(cur)
            cur = ""
        else:
            cur += ch
    if cur.strip() or parts:
        parts.append(cur)
    return parts


def parse_fortran(source: str) -> FortranAst:
    """Parse source text; raises DiagnosticError with a line number on rejection."""
    return _Parser(_logical_lines(source)).program()
