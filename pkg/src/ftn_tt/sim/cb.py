"""Bounded tile FIFO shared by a producer and a consumer engine."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field


class ProtocolError(Exception):
    """Misuse of the reserve/push/wait/pop protocol (distinct from blocking)."""


@dataclass
class CircularBuffer:
    capacity: int
    queue: deque = field(default_factory=deque)
    reserved: int = 0
    staged: list = field(default_factory=list)  # tiles written into reserved slots
    acquired: int = 0  # front tiles granted to the consumer by wait

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("capacity must be >= 1")

    @property
    def free(self) -> int:
        return self.capacity - len(self.queue) - self.reserved

    def can(self, op: str, n: int) -> bool:
        if op == "reserve":
            return self.free >= n
        if op == "wait":
            return len(self.queue) >= n
        return True

    def reserve(self, n: int) -> None:
        assert self.free >= n
        self.reserved += n

    def write_slot(self, tile) -> None:
        if len(self.staged) >= self.reserved:
            raise ProtocolError("write_slot without a reserved slot")
        self.staged.append(tile)

    def push(self, n: int) -> None:
        if self.reserved < n:
            raise ProtocolError(f"push {n} with only {self.reserved} reserved slot(s)")
        for _ in range(n):
            self.queue.append(self.staged.pop(0) if self.staged else None)
        self.reserved -= n

    def wait(self, n: int) -> None:
        assert len(self.queue) >= n
        self.acquired = max(self.acquired, n)

    def front(self):
        if self.acquired < 1:
            raise ProtocolError("read of a tile not acquired by wait")
        return self.queue[0]

    def pop(self, n: int) -> None:
        if self.acquired < n:
            raise ProtocolError(f"pop {n} without a matching wait")
        for _ in range(n):
            self.queue.popleft()
        self.acquired -= n


def cb_transition(cb: CircularBuffer, op: str, n: int = 1) -> str:
    """Apply reserve/push/wait/pop; returns "ok" or "block" (state untouched on block)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if op in ("reserve", "wait"):
        if not cb.can(op, n):
            return "block"
        getattr(cb, op)(n)
        return "ok"
    if op in ("push", "pop"):
        getattr(cb, op)(n)
        return "ok"
    raise ValueError(f"unknown cb op {op!r}")
