"""
SAXPY from Fortran to tiles
===========================

Walk one offloaded loop through every stage of the pipeline, look at the
generated kernels, then run it on the simulated device.
"""

from pathlib import Path

import numpy as np

from ftn_tt import compile_source, print_module, run_pipeline
from ftn_tt.emitter import emit_all_device_sources, emit_host_program
from ftn_tt.sim import interpret_std, replay_host

SOURCE = Path(__file__).resolve().parents[1] / "tests" / "corpus" / "saxpy_teams2.f90"
print(SOURCE.read_text())

###############################################################################
# The frontend produces the surface dialect; three passes lower it.

result = run_pipeline(compile_source(SOURCE.read_text()))
for name, m in result.stages:
    ops = sorted({op.name.split(".")[0] for op in m.walk()})
    print(f"{name:>16}: {len(list(m.walk())):4d} ops, dialects {', '.join(ops)}")

# the standard-dialect form is still a plain loop
print(print_module(dict(result.stages)["ftn_to_std"]))

###############################################################################
# Offloading split the loop body into reader, compute and writer kernels.

for unit in emit_all_device_sources(result.module):
    print(f"// ---- {unit.filename}")
    print(unit.text)

###############################################################################
# Fold the host function into a concrete call list for one input size.

n = 2500
rng = np.random.default_rng(0)
data = {"a": 2.0, "x": rng.random(n, dtype=np.float32), "y": rng.random(n, dtype=np.float32), "n": n}
program = emit_host_program(result.module, data)
print(program.trace())

###############################################################################
# Replay it and compare with the sequential interpreter, bit for bit.

device = replay_host(program, trace=True)
oracle = interpret_std(dict(result.stages)["ftn_to_std"], data)
same = np.array_equal(device.outputs["y"].view(np.uint32), oracle["y"].view(np.uint32))
print(f"{device.steps} scheduler steps, bit-exact: {same}")
print("\n".join(device.trace[:12]))

# two roundings per element, never a fused multiply-add
a = np.float32(data["a"])
print(np.array_equal(device.outputs["y"], (a * data["x"]) + data["y"]))
