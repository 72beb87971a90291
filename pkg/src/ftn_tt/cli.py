"""ftn-tt command-line driver.

    ftn-tt [compile|run|check|dump] SOURCE [options]

Exit codes: 0 ok, 1 diagnostics, 2 deadlock or step budget, 3 check mismatch.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import DeviceConfig
from .dialects import KERNEL_KIND_ATTR
from .emitter import emit_all_device_sources, emit_host_program, static_host_trace
from .frontend import compile_source
from .ir.core import DiagnosticError, Module, error
from .ir.parser import parse_module
from .ir.printer import print_module
from .passes import DEFAULT_PIPELINE, PassPipeline, run_pipeline
from .sim import DeadlockError, StepBudgetExceeded, interpret_std, run_host
from .sim.interp import argument_names, entry_function

MODES = ("compile", "run", "check", "dump")
EXIT_OK, EXIT_DIAG, EXIT_DEADLOCK, EXIT_MISMATCH = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunSpec:
    source: Path
    mode: str = "compile"
    pipeline: list[str] = field(default_factory=lambda: list(DEFAULT_PIPELINE))
    dump_after: set[str] = field(default_factory=set)
    cfg: DeviceConfig = field(default_factory=DeviceConfig)
    cores: int | None = None  # overrides num_teams of every offload region
    bindings: dict = field(default_factory=dict)
    out: Path | None = None
    trace: Path | None = None


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ftn-tt", description="Compile Fortran offload loops for a simulated Tensix-style device.")
    p.add_argument("args", nargs="+", metavar="[MODE] SOURCE", help="optional mode followed by a .f90 or .tir file")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--pipeline", help="comma-separated pass names (empty string for none)")
    p.add_argument("--dump-after", action="append", default=[], metavar="PASS|all")
    p.add_argument("--cores", type=int, help="cores per offload region (overrides num_teams)")
    p.add_argument("--device-cores", type=int, default=DeviceConfig.num_cores, help="cores on the device")
    p.add_argument("--tile-elems", type=int, default=DeviceConfig.tile_elems)
    p.add_argument("--cb-capacity", type=int, default=DeviceConfig.cb_capacity)
    p.add_argument("--max-steps", type=int, default=DeviceConfig.max_steps)
    p.add_argument("--bind", action="append", default=[], metavar="NAME=VALUE|@PATH|[LIST]")
    p.add_argument("--out", type=Path)
    p.add_argument("--trace", type=Path)
    return p


def parse_binding(text: str):
    name, eq, value = text.partition("=")
    name = name.strip()
    if not eq or not name:
        raise UsageError(f"binding {text!r} is not NAME=VALUE")
    value = value.strip()
    try:
        if value.startswith("@"):
            path = Path(value[1:])
            if path.suffix == ".bin":
                return name, np.fromfile(path, dtype="<f4").astype(np.float32)
            return name, _decimal_list(path.read_text())
        if value.startswith("["):
            return name, _decimal_list(value)
        return name, int(value) if _is_int(value) else float(value)
    except OSError as e:
        raise UsageError(f"binding {name}: {e}") from None
    except ValueError:
        raise UsageError(f"binding {name}: cannot parse {value!r}") from None


def _is_int(s: str) -> bool:
    try:
        int(s)
        return True
    except ValueError:
        return False


def _decimal_list(text: str) -> np.ndarray:
    body = text.strip()
    if body.startswith("["):
        if not body.endswith("]"):
            raise ValueError("unterminated list")
        body = body[1:-1]
    items = [t for t in body.replace(",", " ").split() if t]
    return np.array([float(t) for t in items], dtype=np.float32)


def parse_args(argv: list[str]) -> RunSpec:
    ns = _parser().parse_args(argv)
    pos = list(ns.args)
    mode = ns.mode
    if pos[0] in MODES:
        if mode is not None and mode != pos[0]:
            raise UsageError(f"conflicting modes {pos[0]!r} and --mode {mode!r}")
        mode = pos.pop(0)
    if len(pos) != 1:
        raise UsageError("expected exactly one source file")
    pipeline = list(DEFAULT_PIPELINE)
    if ns.pipeline is not None:
        pipeline = [p.strip() for p in ns.pipeline.split(",") if p.strip()]
    dump_after = {d for item in ns.dump_after for d in item.split(",") if d}
    try:
        cfg = DeviceConfig(ns.device_cores, ns.tile_elems, ns.cb_capacity, ns.max_steps)
    except ValueError as e:
        raise UsageError(str(e)) from None
    if ns.cores is not None and ns.cores < 1:
        raise UsageError("--cores must be >= 1")
    return RunSpec(
        source=Path(pos[0]),
        mode=mode or "compile",
        pipeline=pipeline,
        dump_after=dump_after,
        cfg=cfg,
        cores=ns.cores,
        bindings=dict(parse_binding(b) for b in ns.bind),
        out=ns.out,
        trace=ns.trace,
    )


def load_source(path: Path) -> Module:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise DiagnosticError(error(f"{path}: {e.strerror}")) from None
    if path.suffix == ".tir":
        return parse_module(text)
    return compile_source(text)


def override_teams(m: Module, cores: int) -> Module:
    out = m.clone()
    for op in out.walk():
        if op.name == "offload.target":
            op.attributes["num_teams"] = cores
    return out


def _stage_files(stem: str, stages) -> list[tuple[str, str]]:
    return [(f"{stem}.{i}-{name}.tir", print_module(mod)) for i, (name, mod) in enumerate(stages)]


def _write(out: Path, files: list[tuple[str, str]]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files:
        (out / name).write_text(text, encoding="utf-8")


def _format_array(a: np.ndarray) -> str:
    vals = ", ".join(repr(float(v)) for v in a)
    return f"[{vals}]"


def _bits(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float32).view(np.uint32)


def first_mismatch(ref: dict, got: dict) -> tuple[str, int, float, float] | None:
    """First (array, index, oracle value, simulator value) that differs bitwise."""
    for name in ref:
        a, b = ref[name], got.get(name)
        if b is None or a.shape != b.shape:
            return name, -1, float("nan"), float("nan")
        diff = np.nonzero(_bits(a) != _bits(b))[0]
        if diff.size:
            i = int(diff[0])
            return name, i, float(a[i]), float(b[i])
    return None


def _bindings_check(m: Module, bindings: dict) -> None:
    f = entry_function(m)
    if f is None:
        return
    missing = [n for n in argument_names(f) if n not in bindings]
    if missing:
        raise DiagnosticError([error(f"missing binding for '{n}' (use --bind {n}=...)") for n in missing])


def execute(spec: RunSpec, stdout=None) -> int:
    stdout = stdout or sys.stdout
    m = load_source(spec.source)
    if spec.cores is not None:
        m = override_teams(m, spec.cores)
    stem = spec.source.stem
    dump_after = spec.dump_after or ({"all"} if spec.mode == "dump" else set())
    result = run_pipeline(m, PassPipeline(spec.pipeline, dump_after), spec.cfg)
    final = result.module

    if spec.mode == "dump":
        for name, text in result.dumps.items():
            if spec.out is not None:
                _write(spec.out, [(f"{stem}.{name}.tir", text)])
            else:
                stdout.write(f"// after {name}\n{text}")
        return EXIT_OK

    if spec.mode == "compile":
        out = spec.out or Path(f"{stem}_out")
        files = _stage_files(stem, result.stages)
        files += [(u.filename, u.text) for u in emit_all_device_sources(final)]
        kernels = any(KERNEL_KIND_ATTR in f.attributes for f in final.functions)
        f = entry_function(final)
        if f is not None and all(n in spec.bindings for n in argument_names(f)):
            trace = emit_host_program(final, spec.bindings).trace()
        else:
            trace = static_host_trace(final)
        files.append((f"{stem}.host.txt", trace))
        files += [(f"{stem}.{n}.tir", t) for n, t in result.dumps.items()]
        _write(out, files)
        stdout.write(f"wrote {len(files)} files to {out}" + ("" if kernels else " (no offload regions)") + "\n")
        return EXIT_OK

    _bindings_check(m, spec.bindings)
    trace: list[str] | None = [] if spec.trace is not None else None
    try:
        sim = run_host(final, spec.bindings, spec.cfg, trace=trace)
    finally:
        if trace is not None:
            spec.trace.parent.mkdir(parents=True, exist_ok=True)
            spec.trace.write_text("".join(line + "\n" for line in trace), encoding="utf-8")

    if spec.mode == "run":
        for name, arr in sim.outputs.items():
            if spec.out is not None:
                spec.out.mkdir(parents=True, exist_ok=True)
                arr.astype("<f4").tofile(spec.out / f"{name}.bin")
            stdout.write(f"{name} = {_format_array(arr)}\n" if arr.size <= 16 else f"{name} = <{arr.size} values>\n")
        return EXIT_OK

    # check: oracle on the module before any accelerator lowering
    std = result.stages[0][1]
    for name, mod in result.stages:
        if name == "ftn_to_std":
            std = mod
    ref = interpret_std(std, spec.bindings)
    bad = first_mismatch(ref, sim.outputs)
    if bad is not None:
        name, i, want, got = bad
        stdout.write(f"MISMATCH {name}[{i}]: oracle {want!r} simulator {got!r}\n")
        return EXIT_MISMATCH
    stdout.write("check passed: " + ", ".join(f"{k}[{v.size}]" for k, v in ref.items()) + " bit-exact\n")
    return EXIT_OK


def _format_diagnostic(d, source: Path | None) -> str:
    # compiler style for source positions: path:line:col: error: ...
    if source is None:
        return str(d)
    if d.location is None and d.line is not None:
        return f"{source}:{d.line}:{d.column}: {d.severity}: {d.message}"
    return f"{source}: {d}"


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    spec = None
    try:
        spec = parse_args(argv)
        return execute(spec)
    except UsageError as e:
        print(f"ftn-tt: error: {e}", file=sys.stderr)
        return EXIT_DIAG
    except DiagnosticError as e:
        for d in e.diagnostics:
            print(_format_diagnostic(d, spec.source if spec is not None else None), file=sys.stderr)
        return EXIT_DIAG
    except DeadlockError as e:
        print(str(e.report), file=sys.stderr)
        return EXIT_DEADLOCK
    except StepBudgetExceeded as e:
        print(str(e), file=sys.stderr)
        return EXIT_DEADLOCK


if __name__ == "__main__":
    sys.exit(main())
