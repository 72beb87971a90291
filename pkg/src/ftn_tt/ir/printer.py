from __future__ import annotations

import json
import math

from .core import Block, Function, Module, Operation, Region, Value
from .types import SymbolRef

INVALID = "<<invalid>>"


def format_attr(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, SymbolRef):
        return str(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(format_attr(v) for v in value) + "]"
    if isinstance(value, dict):
        return "{" + ", ".join(f"{k} = {format_attr(v)}" for k, v in sorted(value.items())) + "}"
    return INVALID


def format_attr_dict(attrs: dict) -> str:
    return "{" + ", ".join(f"{k} = {format_attr(v)}" for k, v in sorted(attrs.items())) + "}"


class _Printer:
    def __init__(self):
        self.lines: list[str] = []
        self.names: dict[Value, str] = {}

    def define(self, v: Value) -> str:
        name = f"%{len(self.names)}"
        self.names[v] = name
        return name

    def ref(self, v: Value) -> str:
        return self.names.get(v, INVALID)

    def function(self, f: Function, indent: str) -> None:
        self.names = {}
        args = ", ".join(f"{self.define(a)}: {a.type}" for a in f.args)
        head = f"{indent}func @{f.name}({args})"
        if f.result_type is not None:
            head += f" -> {f.result_type}"
        if f.attributes:
            head += f" attributes {format_attr_dict(f.attributes)}"
        self.lines.append(head + " {")
        self.blocks(f.body, indent + "  ", entry_args_in_signature=True)
        self.lines.append(indent + "}")

    def blocks(self, region: Region, indent: str, entry_args_in_signature: bool = False) -> None:
        for i, block in enumerate(region.blocks):
            if i > 0 or (block.args and not entry_args_in_signature):
                self.label(block, i, indent[:-2])
            for op in block.ops:
                self.op(op, indent)

    def label(self, block: Block, idx: int, indent: str) -> None:
        text = f"{indent}^bb{idx}"
        if block.args:
            text += "(" + ", ".join(f"{self.define(a)}: {a.type}" for a in block.args) + ")"
        self.lines.append(text + ":")

    def op(self, op: Operation, indent: str) -> None:
        text = indent
        if op.results:
            text += ", ".join(self.define(r) for r in op.results) + " = "
        text += f"{op.name}(" + ", ".join(self.ref(v) for v in op.operands) + ")"
        if op.attributes:
            text += " " + format_attr_dict(op.attributes)
        sig = (
            " : ("
            + ", ".join(str(v.type) for v in op.operands)
            + ") -> ("
            + ", ".join(str(r.type) for r in op.results)
            + ")"
        )
        if not op.regions:
            self.lines.append(text + sig)
            return
        for k, region in enumerate(op.regions):
            text += (" {" if k == 0 else ", {")
            self.lines.append(text)
            self.blocks(region, indent + "  ")
            text = indent + "}"
        self.lines.append(text + sig)


def print_module(m: Module) -> str:
    p = _Printer()
    head = "module"
    if m.attributes:
        head += f" attributes {format_attr_dict(m.attributes)}"
    p.lines.append(head + " {")
    for f in m.functions:
        p.function(f, "  ")
    p.lines.append("}")
    return "\n".join(p.lines) + "\n"


def print_function(f: Function) -> str:
    p = _Printer()
    p.function(f, "")
    return "\n".join(p.lines) + "\n"
