from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class TilePartition:
    tile_elems: int
    total_tiles: int
    assignments: tuple[tuple[int, int], ...]  # per core: (start_tile, num_tiles)
    tail_len: int  # valid elements in the final partial tile, 0 when n divides evenly


def compute_tile_partition(n: int, tile_elems: int, num_cores: int) -> TilePartition:
    """Blocked distribution of ceil(n / tile_elems) tiles over `num_cores` cores.

    Earlier cores take the remainder, so shares differ by at most one tile.
    """
    if n < 0 or tile_elems < 1 or num_cores < 1:
        raise ValueError(f"invalid partition request n={n} tile={tile_elems} cores={num_cores}")
    total = -(-n // tile_elems)
    base, extra = divmod(total, num_cores)
    assignments = []
    start = 0
    for c in range(num_cores):
        count = base + (1 if c < extra else 0)
        assignments.append((start, count))
        start += count
    return TilePartition(tile_elems, total, tuple(assignments), n % tile_elems)
