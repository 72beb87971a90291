"""Module / function / region / block / operation graph."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .types import Type


@dataclass(frozen=True)
class Location:
    """Position of an op: innermost (block, op) indices plus enclosing
    (block, op, region) triples from the function body inwards."""

    function: str
    block: int
    op: int
    nesting: tuple[tuple[int, int, int], ...] = ()

    def __str__(self) -> str:
        parts = [f"@{self.function}"]
        for b, o, r in self.nesting:
            parts.append(f"bb{b}:op{o}:r{r}")
        parts.append(f"bb{self.block}:op{self.op}")
        return "/".join(parts)


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    message: str
    location: Location | None = None
    line: int | None = None
    column: int | None = None

    def __str__(self) -> str:
        where = ""
        if self.location is not None:
            where = f"{self.location}: "
        elif self.line is not None:
            where = f"{self.line}:{self.column}: "
        return f"{where}{self.severity}: {self.message}"


class DiagnosticError(Exception):
    """Raised by entry points that cannot produce a result."""

    def __init__(self, diagnostics: list[Diagnostic] | Diagnostic):
        if isinstance(diagnostics, Diagnostic):
            diagnostics = [diagnostics]
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


def error(message: str, location: Location | None = None, **kw) -> Diagnostic:
    return Diagnostic("error", message, location, **kw)


class Value:
    __slots__ = ("type", "owner", "index")

    def __init__(self, type: Type, owner, index: int):
        self.type = type
        self.owner = owner  # Operation for results, Block for arguments
        self.index = index

    def __repr__(self) -> str:
        return f"<Value {self.type} of {type(self.owner).__name__}#{self.index}>"


class Operation:
    __slots__ = ("dialect", "opname", "operands", "results", "attributes", "regions", "parent")

    def __init__(
        self,
        name: str,
        operands=(),
        result_types=(),
        attributes: dict | None = None,
        regions=(),
    ):
        self.dialect, _, self.opname = name.partition(".")
        self.operands: list[Value] = list(operands)
        self.results = [Value(t, self, i) for i, t in enumerate(result_types)]
        self.attributes: dict = dict(attributes or {})
        self.regions: list[Region] = []
        self.parent: Block | None = None
        for r in regions:
            self.add_region(r)

    @property
    def name(self) -> str:
        return f"{self.dialect}.{self.opname}"

    @property
    def result(self) -> Value:
        if len(self.results) != 1:
            raise ValueError(f"{self.name} has {len(self.results)} results")
        return self.results[0]

    def add_region(self, region: Region) -> Region:
        region.parent = self
        self.regions.append(region)
        return region

    def walk(self) -> Iterator[Operation]:
        """Pre-order walk including self."""
        yield self
        for r in self.regions:
            yield from r.walk()

    def __repr__(self) -> str:
        return f"<Operation {self.name}>"


class Block:
    __slots__ = ("args", "ops", "parent")

    def __init__(self, arg_types=(), ops=()):
        self.args = [Value(t, self, i) for i, t in enumerate(arg_types)]
        self.ops: list[Operation] = []
        self.parent: Region | None = None
        for op in ops:
            self.append(op)

    def append(self, op: Operation) -> Operation:
        op.parent = self
        self.ops.append(op)
        return op

    def walk(self) -> Iterator[Operation]:
        for op in self.ops:
            yield from op.walk()


class Region:
    __slots__ = ("blocks", "parent")

    def __init__(self, blocks=()):
        self.blocks: list[Block] = []
        self.parent = None
        for b in blocks:
            self.add_block(b)

    def add_block(self, block: Block) -> Block:
        block.parent = self
        self.blocks.append(block)
        return block

    @property
    def block(self) -> Block:
        return self.blocks[0]

    def walk(self) -> Iterator[Operation]:
        for b in self.blocks:
            yield from b.walk()


class Function:
    def __init__(
        self,
        name: str,
        arg_types=(),
        result_type: Type | None = None,
        attributes: dict | None = None,
        body: Region | None = None,
    ):
        self.name = name
        self.result_type = result_type
        self.attributes: dict = dict(attributes or {})
        if body is None:
            body = Region([Block(arg_types)])
        self.body = body
        body.parent = self

    @property
    def args(self) -> list[Value]:
        return self.body.blocks[0].args

    @property
    def entry(self) -> Block:
        return self.body.blocks[0]

    @property
    def kernel_kind(self) -> str | None:
        return self.attributes.get("tt.kernel_kind")

    def walk(self) -> Iterator[Operation]:
        return self.body.walk()

    def __repr__(self) -> str:
        return f"<Function @{self.name}>"


@dataclass
class Module:
    functions: list[Function] = field(default_factory=list)
    attributes: dict = field(default_factory=dict)

    def get(self, name: str) -> Function | None:
        for f in self.functions:
            if f.name == name:
                return f
        return None

    def __getitem__(self, name: str) -> Function:
        f = self.get(name)
        if f is None:
            raise KeyError(name)
        return f

    def walk(self) -> Iterator[Operation]:
        for f in self.functions:
            yield from f.walk()

    def clone(self) -> Module:
        return clone_module(self)


def function_of(op: Operation) -> Function | None:
    node = op
    while node is not None:
        block = node.parent
        if block is None or block.parent is None:
            return None
        owner = block.parent.parent
        if isinstance(owner, Function):
            return owner
        node = owner
    return None


def location_of(op: Operation) -> Location | None:
    """Compute the (function, block, op) location of an attached op."""
    levels = []  # (region index in owner, block index, op index), innermost first
    node = op
    while True:
        block = node.parent
        if block is None or block.parent is None:
            return None
        region = block.parent
        owner = region.parent
        b_idx = region.blocks.index(block)
        o_idx = next(i for i, o in enumerate(block.ops) if o is node)
        if isinstance(owner, Function):
            levels.append((None, b_idx, o_idx))
            break
        if owner is None:
            return None
        levels.append((owner.regions.index(region), b_idx, o_idx))
        node = owner
    levels.reverse()
    nesting = tuple((b, o, levels[i + 1][0]) for i, (_, b, o) in enumerate(levels[:-1]))
    _, b, o = levels[-1]
    return Location(owner.name, b, o, nesting)


# -- cloning -----------------------------------------------------------------


def _copy_attr(v):
    if isinstance(v, list):
        return [_copy_attr(x) for x in v]
    if isinstance(v, dict):
        return {k: _copy_attr(x) for k, x in v.items()}
    return v


def clone_region(region: Region, mapping: dict[Value, Value]) -> Region:
    new = Region()
    for block in region.blocks:
        nb = Block([a.type for a in block.args])
        for a, na in zip(block.args, nb.args):
            mapping[a] = na
        new.add_block(nb)
    for block, nb in zip(region.blocks, new.blocks):
        for op in block.ops:
            nb.append(clone_op(op, mapping))
    return new


def clone_op(op: Operation, mapping: dict[Value, Value]) -> Operation:
    """Deep copy; operands are remapped through `mapping` (unmapped values are kept)."""
    new = Operation(
        op.name,
        [mapping.get(v, v) for v in op.operands],
        [r.type for r in op.results],
        _copy_attr(op.attributes),
    )
    for r, nr in zip(op.results, new.results):
        mapping[r] = nr
    for region in op.regions:
        new.add_region(clone_region(region, mapping))
    return new


def clone_function(f: Function, mapping: dict[Value, Value] | None = None) -> Function:
    mapping = {} if mapping is None else mapping
    return Function(f.name, result_type=f.result_type, attributes=_copy_attr(f.attributes),
                    body=clone_region(f.body, mapping))


def clone_module(m: Module) -> Module:
    return Module([clone_function(f) for f in m.functions], _copy_attr(m.attributes))


class Builder:
    """Appends operations at the end of a block."""

    def __init__(self, block: Block):
        self.block = block

    def op(self, name: str, operands=(), result_types=(), attributes=None, regions=()) -> Operation:
        return self.block.append(Operation(name, operands, result_types, attributes, regions))

    def value(self, name: str, operands, result_type: Type, attributes=None, regions=()) -> Value:
        return self.op(name, operands, [result_type], attributes, regions).result
