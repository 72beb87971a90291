"""
Circular buffers and deadlocks
==============================

The engines on a core talk through bounded FIFOs. A producer reserves and
pushes; a consumer waits and pops. Blocking is not an error; a schedule in
which nobody can move is.
"""

from pathlib import Path

from ftn_tt.config import DeviceConfig
from ftn_tt.ir import parse_module
from ftn_tt.passes import run_pipeline
from ftn_tt.sim import CircularBuffer, DeadlockError, ProtocolError, cb_transition, run_host

cb = CircularBuffer(capacity=2)
for op, n in [("reserve", 2), ("reserve", 1), ("push", 2), ("wait", 2), ("pop", 1), ("reserve", 1)]:
    status = cb_transition(cb, op, n)
    print(f"{op:8s}{n}  -> {status:5s}  queued={len(cb.queue)} reserved={cb.reserved}")

###############################################################################
# Misuse of the protocol raises instead of blocking.

try:
    cb_transition(CircularBuffer(2), "pop", 1)
except ProtocolError as e:
    print("protocol error:", e)

###############################################################################
# The deadlock corpus: each program is wrong in a different way and the
# scheduler names every engine that is stuck, with the buffer it waits on.

corpus = Path(__file__).resolve().parents[1] / "tests" / "corpus" / "deadlock"
for path in sorted(corpus.glob("*.tir")):
    m = run_pipeline(parse_module(path.read_text())).module
    try:
        run_host(m, {}, DeviceConfig(max_steps=10_000))
    except DeadlockError as e:
        print(f"== {path.stem}: {path.read_text().splitlines()[0]}")
        print(e.report)
