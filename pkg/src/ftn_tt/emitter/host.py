from __future__ import annotations

import numpy as np

from ..config import DeviceConfig
from ..ir.core import Module
from ..ir.printer import _Printer
from ..sim.interp import host_functions
from ..sim.runtime import HostProgram, run_host


def emit_host_program(m: Module, data: dict, entry: str | None = None) -> HostProgram:
    """Fold the host function into a concrete runtime call list.

    The host function is evaluated on `data` with runtime calls recorded but
    not executed; array arguments become payloads named after the argument.
    """
    run = run_host(m, data, DeviceConfig(), execute=False, entry=entry)
    payloads = {}
    for name, v in data.items():
        if name in run.outputs:
            payloads[name] = np.array(v, dtype=np.float32).reshape(-1)
    return HostProgram(run.calls, m, payloads)


def static_host_trace(m: Module) -> str:
    """Runtime calls of every host function with symbolic (SSA) arguments."""
    lines = []
    for f in host_functions(m):
        p = _Printer()
        p.function(f, "")
        lines.append(f"FUNC @{f.name}")
        for op in f.walk():
            if op.name != "func.call":
                continue
            parts = ["CALL", op.attributes["callee"].name]
            if "kernel" in op.attributes:
                parts.append(str(op.attributes["kernel"]))
            parts += [p.ref(v) for v in op.operands]
            if op.results:
                parts += ["->", p.ref(op.results[0])]
            lines.append(" ".join(parts))
    return "".join(line + "\n" for line in lines)
