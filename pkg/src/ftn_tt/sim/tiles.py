from __future__ import annotations

import numpy as np

_FN = {"add": np.add, "sub": np.subtract, "mul": np.multiply, "div": np.divide}


def exec_compute_op(opname: str, a: np.ndarray, b, reverse: bool = False) -> np.ndarray:
    """Lane-wise tile arithmetic, one f32 rounding per lane.

    `opname` is ``<add|sub|mul|div>_<tiles|scalar>``; for the scalar forms `b`
    is an f32 scalar and `reverse` computes ``b op a`` instead of ``a op b``.
    """
    kind, _, form = opname.partition("_")
    if form not in ("tiles", "scalar") or kind not in _FN:
        raise ValueError(f"unknown compute op {opname!r}")
    a = np.asarray(a, dtype=np.float32)
    b = np.asarray(b, dtype=np.float32) if form == "tiles" else np.float32(b)
    if reverse:
        a, b = b, a
    with np.errstate(all="ignore"):
        return _FN[kind](a, b).astype(np.float32, copy=False)
