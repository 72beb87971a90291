from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class DeviceConfig:
    """Accelerator description shared by the compiler and the simulator.

    `tile_elems` stands in for the vector width: one tile is the unit of data
    movement and compute. `max_steps` bounds a single device launch.
    """

    num_cores: int = 128
    tile_elems: int = 1024
    cb_capacity: int = 2
    max_steps: int = 50_000_000

    def __post_init__(self):
        if self.num_cores < 1:
            raise ValueError("num_cores must be >= 1")
        if self.tile_elems < 1:
            raise ValueError("tile_elems must be >= 1")
        if self.cb_capacity < 1:
            raise ValueError("cb_capacity must be >= 1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
