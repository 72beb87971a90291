from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..ir.core import Diagnostic, DiagnosticError

CONSTRUCT_WORDS = {"target", "teams", "distribute", "parallel", "do", "simd", "loop"}
INT_CLAUSES = ("num_teams", "num_threads", "simdlen")
MAP_KINDS = ("to", "from", "tofrom")

_CLAUSE = re.compile(r"\s*([a-z_]+)\s*(\(([^()]*)\))?", re.IGNORECASE)


@dataclass
class OffloadClauses:
    num_teams: int = 1
    num_threads: int | None = None
    simdlen: int | None = None
    map_to: list[str] = field(default_factory=list)
    map_from: list[str] = field(default_factory=list)
    map_tofrom: list[str] = field(default_factory=list)
    constructs: tuple[str, ...] = ()

    def map_kind_of(self, name: str) -> str | None:
        for kind in MAP_KINDS:
            if name in getattr(self, f"map_{kind}"):
                return kind
        return None


def _fail(message: str, line: int | None) -> DiagnosticError:
    return DiagnosticError(Diagnostic("error", message, None, line, 1 if line else None))


def _directive_words(text: str, line: int | None) -> str:
    body = text.strip()
    if not body.lower().startswith("!$omp"):
        raise _fail("directive must start with '!$omp'", line)
    body = body[5:].strip()
    # tolerate the doubled sentinel spelling "!$omp omp target ..."
    if body.lower().startswith("omp "):
        body = body[4:].strip()
    return body


def is_end_directive(text: str) -> bool:
    try:
        body = _directive_words(text, None)
    except DiagnosticError:
        return False
    return body.lower().split()[:1] == ["end"]


def parse_directive(text: str, line: int | None = None) -> OffloadClauses:
    """Parse a joined ``!$omp target ...`` line into a clause bundle.

    A line without the ``!$omp`` sentinel is taken to be the directive body
    itself, e.g. ``"target parallel do simd num_threads(20)"``.
    """
    if text.strip().lower().startswith("!$omp"):
        body = _directive_words(text, line)
    else:
        body = text.strip()
        if body.lower().startswith("omp "):
            body = body[4:].strip()
    clauses = OffloadClauses()
    constructs: list[str] = []
    seen: set[str] = set()
    pos = 0
    while pos < len(body):
        if body[pos] in " ,\t":
            pos += 1
            continue
        m = _CLAUSE.match(body, pos)
        if m is None:
            raise _fail(f"malformed directive text near '{body[pos:]}'", line)
        pos = m.end()
        word = m.group(1).lower()
        arg = m.group(3)
        if m.group(2) is None and word in CONSTRUCT_WORDS:
            if constructs and constructs.count(word):
                raise _fail(f"construct '{word}' repeated", line)
            constructs.append(word)
            continue
        if word in INT_CLAUSES:
            if word in seen:
                raise _fail(f"clause '{word}' given twice", line)
            seen.add(word)
            if arg is None:
                raise _fail(f"clause '{word}' needs an argument", line)
            try:
                value = int(arg.strip())
            except ValueError:
                raise _fail(f"clause '{word}' needs an integer argument, got '{arg.strip()}'", line) from None
            if value <= 0:
                raise _fail(f"clause '{word}' must be positive, got {value}", line)
            setattr(clauses, word, value)
            continue
        if word == "map":
            if arg is None:
                raise _fail("map clause needs a variable list", line)
            kind, sep, names = arg.partition(":")
            if not sep:
                kind, names = "tofrom", arg
            kind = kind.strip().lower()
            if kind not in MAP_KINDS:
                raise _fail(f"unsupported map type '{kind}'", line)
            for name in (n.strip().lower() for n in names.split(",")):
                if not re.fullmatch(r"[a-z_][a-z0-9_]*", name):
                    raise _fail(f"bad variable name '{name}' in map clause", line)
                if clauses.map_kind_of(name) is not None:
                    raise _fail(f"variable '{name}' appears in more than one map clause", line)
                getattr(clauses, f"map_{kind}").append(name)
            continue
        raise _fail(f"unknown clause '{word}'", line)
    if not constructs or constructs[0] != "target":
        raise _fail("only 'target' directives are supported", line)
    clauses.constructs = tuple(constructs)
    return clauses
