"""
Random elementwise kernels
==========================

Generate arbitrary expression loops, compile each one, and check the
simulated device against a direct numpy evaluation. Then look at how
tiles are spread over cores.
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from fortgen import random_program  # noqa: E402

from ftn_tt import compute_tile_partition, compile_source, run_pipeline  # noqa: E402
from ftn_tt.sim import run_host  # noqa: E402

rng = np.random.default_rng(1)
for seed in range(8):
    p = random_program(seed)
    n = int(rng.integers(1, 5000))
    data = p.inputs(n, rng)
    final = run_pipeline(compile_source(p.source)).module
    got = run_host(final, data).outputs[p.target]
    want = p.oracle(data)[p.target]
    pad = {op.attributes["pad"] for op in final.walk() if op.name == "tt_dm.read_tile"}
    body = p.source.splitlines()[-4].strip()
    print(f"{body:60.60s} n={n:4d} teams={p.teams} pad={pad} exact={np.array_equal(got.view('u4'), want.view('u4'))}")

###############################################################################
# Partition arithmetic: earlier cores absorb the remainder, and only the
# very last tile may be partial.

for n, cores in [(2500, 2), (1025, 3), (100_000, 8), (10, 4)]:
    part = compute_tile_partition(n, 1024, cores)
    print(f"n={n:6d} cores={cores}: {part.total_tiles} tiles {part.assignments} tail={part.tail_len}")
