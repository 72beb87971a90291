"""Recursive-descent parser for the textual IR form.

    module   := "module" ("attributes" attrs)? "{" func* "}"
    func     := "func" sym "(" args? ")" ("->" type)? ("attributes" attrs)? "{" block+ "}"
    block    := ("^" ident ("(" args ")")? ":")? op*
    op       := (results "=")? dialect "." opname "(" operands? ")" attrs? regions? ":" typesig
    regions  := region ("," region)*
    region   := "{" block+ "}"
    typesig  := "(" types? ")" "->" "(" types? ")"
"""

from __future__ import annotations

import json
import re

from .core import Block, Diagnostic, DiagnosticError, Function, Module, Operation, Region, Value
from .types import F32, MemRefType, ScalarType, SCALAR_KINDS, SymbolRef, TileType, Type

_WS = re.compile(r"(?:\s+|//[^\n]*)+")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_DOTTED = re.compile(r"[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*")
_VALUE = re.compile(r"%[A-Za-z0-9_$.]+")
_LABEL = re.compile(r"\^[A-Za-z0-9_$.]+")
_SYMBOL = re.compile(r"@[A-Za-z_][A-Za-z0-9_$.]*")
_NUMBER = re.compile(r"[-+]?(?:\d+\.\d*(?:[eE][-+]?\d+)?|\d+[eE][-+]?\d+|\.\d+(?:[eE][-+]?\d+)?|\d+)")
_SPECIAL_FLOAT = re.compile(r"-?inf\b|nan\b")
_STRING = re.compile(r'"(?:[^"\\]|\\.)*"')
_MEMREF = re.compile(r"memref<((?:(?:\d+|\?)x)*)([a-z0-9]+)>")
_TILE = re.compile(r"tile<([a-z0-9]+)>")


def parse_type(text: str) -> Type:
    p = _Parser(text)
    t = p.type()
    p.ws()
    if p.pos != len(text):
        p.fail("trailing characters after type")
    return t


class _Scope:
    def __init__(self, parent: _Scope | None = None):
        self.parent = parent
        self.names: dict[str, Value] = {}

    def lookup(self, name: str) -> Value | None:
        s = self
        while s is not None:
            if name in s.names:
                return s.names[name]
            s = s.parent
        return None


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    # -- scanning ----------------------------------------------------------

    def position(self, pos: int | None = None) -> tuple[int, int]:
        pos = self.pos if pos is None else pos
        line = self.text.count("\n", 0, pos) + 1
        col = pos - (self.text.rfind("\n", 0, pos) + 1) + 1
        return line, col

    def fail(self, message: str, pos: int | None = None):
        line, col = self.position(pos)
        raise DiagnosticError(Diagnostic("error", message, None, line, col))

    def ws(self) -> None:
        m = _WS.match(self.text, self.pos)
        if m:
            self.pos = m.end()

    def peek(self, s: str) -> bool:
        self.ws()
        return self.text.startswith(s, self.pos)

    def accept(self, s: str) -> bool:
        if self.peek(s):
            self.pos += len(s)
            return True
        return False

    def expect(self, s: str) -> None:
        if not self.accept(s):
            found = self.text[self.pos:self.pos + 12].split("\n")[0] or "end of input"
            self.fail(f"expected '{s}', found '{found}'")

    def match(self, regex: re.Pattern) -> str | None:
        self.ws()
        m = regex.match(self.text, self.pos)
        if m is None:
            return None
        self.pos = m.end()
        return m.group(0)

    def keyword(self, word: str) -> bool:
        self.ws()
        m = _IDENT.match(self.text, self.pos)
        if m and m.group(0) == word:
            self.pos = m.end()
            return True
        return False

    # -- types and attributes ---------------------------------------------

    def scalar(self, kind: str, pos: int) -> ScalarType:
        if kind not in SCALAR_KINDS:
            self.fail(f"unknown type kind '{kind}'", pos)
        return ScalarType(kind)

    def type(self) -> Type:
        self.ws()
        start = self.pos
        m = _MEMREF.match(self.text, self.pos)
        if m:
            self.pos = m.end()
            dims = tuple(None if d == "?" else int(d) for d in m.group(1).split("x")[:-1])
            if any(d == 0 for d in dims):
                self.fail("memref dims must be positive or '?'", start)
            return MemRefType(dims, self.scalar(m.group(2), start))
        m = _TILE.match(self.text, self.pos)
        if m:
            self.pos = m.end()
            if m.group(1) != "f32":
                self.fail("tile element kind must be f32", start)
            return TileType(F32)
        word = self.match(_IDENT)
        if word is None:
            self.fail("expected a type")
        if word in ("memref", "tile"):
            self.fail(f"malformed {word} type", start)
        return self.scalar(word, start)

    def attr_value(self):
        self.ws()
        if self.peek("["):
            self.expect("[")
            items = []
            if not self.accept("]"):
                items.append(self.attr_value())
                while self.accept(","):
                    items.append(self.attr_value())
                self.expect("]")
            return items
        if self.peek("{"):
            return self.attr_dict()
        s = self.match(_STRING)
        if s is not None:
            return json.loads(s)
        s = self.match(_SYMBOL)
        if s is not None:
            return SymbolRef(s[1:])
        s = self.match(_SPECIAL_FLOAT)
        if s is not None:
            return float(s)
        s = self.match(_NUMBER)
        if s is not None:
            if any(c in s for c in ".eE"):
                return float(s)
            return int(s)
        self.fail("expected an attribute value")

    def attr_dict(self) -> dict:
        self.expect("{")
        attrs: dict = {}
        if self.accept("}"):
            return attrs
        while True:
            start = self.pos
            key = self.match(_DOTTED)
            if key is None:
                self.fail("expected attribute name")
            if key in attrs:
                self.fail(f"duplicate attribute '{key}'", start)
            self.expect("=")
            attrs[key] = self.attr_value()
            if self.accept("}"):
                return attrs
            self.expect(",")

    def looking_at_attr_dict(self) -> bool:
        if not self.peek("{"):
            return False
        save = self.pos
        self.pos += 1
        ok = self.match(_DOTTED) is not None and self.peek("=")
        self.pos = save
        return ok

    # -- structure ----------------------------------------------------------

    def define(self, scope: _Scope, name: str, value: Value, pos: int) -> None:
        if name in scope.names:
            self.fail(f"duplicate value name {name} within a block", pos)
        scope.names[name] = value

    def arg_list(self) -> list[tuple[str, Type, int]]:
        args = []
        self.expect("(")
        if self.accept(")"):
            return args
        while True:
            self.ws()
            pos = self.pos
            name = self.match(_VALUE)
            if name is None:
                self.fail("expected block argument name")
            self.expect(":")
            args.append((name, self.type(), pos))
            if self.accept(")"):
                return args
            self.expect(",")

    def module(self) -> Module:
        if not self.keyword("module"):
            self.fail("expected 'module'")
        m = Module()
        if self.keyword("attributes"):
            m.attributes = self.attr_dict()
        self.expect("{")
        while not self.accept("}"):
            m.functions.append(self.function())
        self.ws()
        if self.pos != len(self.text):
            self.fail("unexpected text after module")
        return m

    def function(self) -> Function:
        if not self.keyword("func"):
            self.fail("expected 'func' or '}'")
        sym = self.match(_SYMBOL)
        if sym is None:
            self.fail("expected function symbol")
        args = self.arg_list()
        result_type = None
        if self.accept("->"):
            result_type = self.type()
        attrs = {}
        if self.keyword("attributes"):
            attrs = self.attr_dict()
        f = Function(sym[1:], [t for _, t, _ in args], result_type, attrs)
        scope = _Scope()
        for (name, _, pos), v in zip(args, f.args):
            self.define(scope, name, v, pos)
        self.expect("{")
        self.region_body(f.body, scope, reuse_entry=True)
        return f

    def region_body(self, region: Region, outer: _Scope, reuse_entry: bool = False) -> None:
        """Parse blocks up to and including the closing brace."""
        first = True
        while True:
            if self.accept("}"):
                if first and not reuse_entry:
                    region.add_block(Block())
                return
            self.ws()
            pos = self.pos
            label = self.match(_LABEL)
            if first and reuse_entry:
                block = region.blocks[0]
                scope = outer
                if label is not None:
                    self.fail("entry block of a function takes its arguments from the signature", pos)
            else:
                args = []
                if label is not None:
                    if self.peek("("):
                        args = self.arg_list()
                    self.expect(":")
                elif not first:
                    self.fail("expected block label")
                block = region.add_block(Block([t for _, t, _ in args]))
                scope = _Scope(outer)
                for (name, _, apos), v in zip(args, block.args):
                    self.define(scope, name, v, apos)
            first = False
            while not (self.peek("}") or self.peek("^")):
                block.append(self.operation(scope))

    def operation(self, scope: _Scope) -> Operation:
        self.ws()
        start = self.pos
        results: list[tuple[str, int]] = []
        if self.peek("%"):
            while True:
                self.ws()
                rpos = self.pos
                name = self.match(_VALUE)
                if name is None:
                    self.fail("expected result name")
                results.append((name, rpos))
                if not self.accept(","):
                    break
            self.expect("=")
        self.ws()
        name_pos = self.pos
        name = self.match(_DOTTED)
        if name is None or "." not in name:
            self.fail("expected operation name 'dialect.opname'", name_pos)
        self.expect("(")
        operands: list[tuple[Value, int]] = []
        if not self.accept(")"):
            while True:
                self.ws()
                vpos = self.pos
                ref = self.match(_VALUE)
                if ref is None:
                    self.fail("expected operand")
                v = scope.lookup(ref)
                if v is None:
                    self.fail(f"use of undefined value {ref}", vpos)
                operands.append((v, vpos))
                if self.accept(")"):
                    break
                self.expect(",")
        attrs = {}
        if self.looking_at_attr_dict():
            attrs = self.attr_dict()
        regions: list[Region] = []
        if self.peek("{"):
            while True:
                self.expect("{")
                region = Region()
                self.region_body(region, scope)
                regions.append(region)
                if not self.accept(","):
                    break
        self.expect(":")
        self.ws()
        sig_pos = self.pos
        in_types = self.type_list()
        self.expect("->")
        out_types = self.type_list()
        if len(in_types) != len(operands):
            self.fail(f"type signature lists {len(in_types)} operand types for {len(operands)} operands", sig_pos)
        for i, ((v, vpos), t) in enumerate(zip(operands, in_types)):
            if v.type != t:
                self.fail(f"operand #{i} has type {v.type} but signature says {t}", vpos)
        if results and len(results) != len(out_types):
            self.fail(f"{len(results)} result names for {len(out_types)} result types", start)
        if not results and out_types:
            self.fail("operation results must be named", start)
        op = Operation(name, [v for v, _ in operands], out_types, attrs, regions)
        for (rname, rpos), r in zip(results, op.results):
            self.define(scope, rname, r, rpos)
        return op

    def type_list(self) -> list[Type]:
        self.expect("(")
        types = []
        if self.accept(")"):
            return types
        types.append(self.type())
        while self.accept(","):
            types.append(self.type())
        self.expect(")")
        return types


def parse_module(text: str) -> Module:
    """Parse IR text; raises DiagnosticError carrying a line/column diagnostic."""
    return _Parser(text).module()
