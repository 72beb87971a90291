from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import pytest

from ftn_tt.dialects import register_builtin_dialects
from ftn_tt.frontend import compile_source
from ftn_tt.ir import parse_module

HERE = Path(__file__).parent
CORPUS = HERE / "corpus"
GOLDEN = HERE / "golden"

POSITIVE = sorted(CORPUS.glob("*.f90"))
NEGATIVE = sorted((CORPUS / "negative").glob("*.f90"))
DEADLOCK = sorted((CORPUS / "deadlock").glob("*.tir"))
HAND_IR = sorted((CORPUS / "ir").glob("*.tir"))  # hand-written runnable device programs
SAXPY = CORPUS / "saxpy.f90"


def load(path: Path):
    text = path.read_text()
    return parse_module(text) if path.suffix == ".tir" else compile_source(text)


def check_golden(name: str, text: str) -> None:
    """Compare against tests/golden/<name>; UPDATE_GOLDEN=1 rewrites it."""
    path = GOLDEN / name
    if os.environ.get("UPDATE_GOLDEN") == "1" or not path.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    assert text == path.read_text(), f"golden mismatch: {name}"


def bits(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float32).view(np.uint32)


def random_inputs(f, n: int, rng: np.random.Generator) -> dict:
    """Bindings for every argument of a lowered host function."""
    from ftn_tt.sim.interp import argument_names

    out = {}
    for name, a in zip(argument_names(f), f.args):
        t = a.type
        if getattr(t, "kind", None) == "i32":
            out[name] = n
        elif getattr(t, "kind", None) == "f32":
            out[name] = float(np.float32(rng.uniform(-4, 4)))
        else:
            size = t.shape[0] if t.shape[0] is not None else n
            out[name] = rng.uniform(-8, 8, size).astype(np.float32)
    return out


@pytest.fixture(scope="session")
def registry():
    return register_builtin_dialects()


# acceptance outcomes, filled by test_acceptance.py and echoed after the run
ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        status, title = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {status}  {title}")
