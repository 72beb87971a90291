"""IR type and attribute values."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

SCALAR_KINDS = ("f32", "i32", "i1", "index", "none")


@dataclass(frozen=True)
class Type:
    pass


@dataclass(frozen=True)
class ScalarType(Type):
    kind: str

    def __post_init__(self):
        if self.kind not in SCALAR_KINDS:
            raise ValueError(f"unknown scalar type kind {self.kind!r}")

    def __str__(self) -> str:
        return self.kind


@dataclass(frozen=True)
class MemRefType(Type):
    # None marks a dynamic dimension
    shape: tuple[int | None, ...]
    element: ScalarType

    def __post_init__(self):
        for d in self.shape:
            if d is not None and (not isinstance(d, int) or d <= 0):
                raise ValueError(f"memref dims must be positive or dynamic, got {d!r}")

    def __str__(self) -> str:
        dims = "".join(("?" if d is None else str(d)) + "x" for d in self.shape)
        return f"memref<{dims}{self.element}>"


@dataclass(frozen=True)
class TileType(Type):
    element: ScalarType

    def __post_init__(self):
        if self.element.kind != "f32":
            raise ValueError("tile element kind must be f32")

    def __str__(self) -> str:
        return f"tile<{self.element}>"


F32 = ScalarType("f32")
I32 = ScalarType("i32")
I1 = ScalarType("i1")
INDEX = ScalarType("index")
NONE = ScalarType("none")
TILE = TileType(F32)


def memref(*shape: int | None, element: ScalarType = F32) -> MemRefType:
    return MemRefType(tuple(shape), element)


@dataclass(frozen=True)
class SymbolRef:
    name: str

    def __str__(self) -> str:
        return f"@{self.name}"


# int | float | str | SymbolRef | list[Attribute] | dict[str, Attribute]
Attribute = Union[int, float, str, SymbolRef, list, dict]


def attr_kind(value) -> str:
    if isinstance(value, bool):
        raise TypeError("booleans are not IR attributes; use 0/1")
    if isinstance(value, int):
        return "int"
    if isinstance(value, float):
        return "float"
    if isinstance(value, str):
        return "string"
    if isinstance(value, SymbolRef):
        return "symbol"
    if isinstance(value, (list, tuple)):
        return "array"
    if isinstance(value, dict):
        return "map"
    raise TypeError(f"unsupported attribute value {value!r}")
