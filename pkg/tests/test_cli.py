import subprocess
import sys

import numpy as np
import pytest

from conftest import CORPUS, DEADLOCK, NEGATIVE, SAXPY, bits
from ftn_tt import cli
from ftn_tt.dialects import register_builtin_dialects
from ftn_tt.ir import parse_module, verify
from ftn_tt.sim import device

REG = register_builtin_dialects()


def _run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def _saxpy_bins(tmp_path, n, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-8, 8, n).astype("<f4")
    y = rng.uniform(-8, 8, n).astype("<f4")
    x.tofile(tmp_path / "x.bin")
    y.tofile(tmp_path / "y.bin")
    return x, y


# -- exit codes ---------------------------------------------------------------


def test_compile_file_census(tmp_path, capsys):
    code, out, _ = _run(capsys, "compile", SAXPY, "--out", tmp_path)
    assert code == 0 and "wrote 8 files" in out
    names = sorted(p.name for p in tmp_path.iterdir())
    assert [n for n in names if n.endswith(".tir")] == [
        "saxpy.0-input.tir", "saxpy.1-ftn_to_std.tir", "saxpy.2-offload_to_tt.tir", "saxpy.3-host_to_runtime.tir"]
    assert sorted(n for n in names if n.endswith(".cpp.txt")) == [
        f"saxpy_offload0_{k}.cpp.txt" for k in ("compute", "reader", "writer")]
    assert "saxpy.host.txt" in names
    for p in tmp_path.glob("*.tir"):
        assert verify(parse_module(p.read_text()), REG) == []


def test_compile_with_bindings_records_concrete_calls(tmp_path, capsys):
    _saxpy_bins(tmp_path, 40)
    code, _, _ = _run(capsys, "compile", SAXPY, "--out", tmp_path / "o", "--bind", "n=40", "--bind", "a=1.5",
                      "--bind", f"x=@{tmp_path / 'x.bin'}", "--bind", f"y=@{tmp_path / 'y.bin'}")
    host = (tmp_path / "o" / "saxpy.host.txt").read_text().splitlines()
    assert code == 0 and host[1] == "CALL tt_rt_create_buffer 160 -> 0"


def test_check_saxpy_two_cores(tmp_path, capsys):
    _saxpy_bins(tmp_path, 2500)
    code, out, _ = _run(capsys, "check", SAXPY, "--bind", "n=2500", "--bind", "a=2.0",
                        "--bind", f"x=@{tmp_path / 'x.bin'}", "--bind", f"y=@{tmp_path / 'y.bin'}", "--cores", "2")
    assert code == 0 and out == "check passed: x[2500], y[2500] bit-exact\n"


def test_run_writes_outputs(tmp_path, capsys):
    code, out, _ = _run(capsys, "run", SAXPY, "--bind", "n=3", "--bind", "a=2", "--bind", "x=[1,2,3]",
                        "--bind", "y=[10, 20, 30]", "--out", tmp_path, "--trace", tmp_path / "t.txt")
    assert code == 0 and "y = [12.0, 24.0, 36.0]" in out
    assert np.fromfile(tmp_path / "y.bin", dtype="<f4").tolist() == [12, 24, 36]
    lines = (tmp_path / "t.txt").read_text().splitlines()
    assert lines[0].startswith("STEP 1 CORE 0 ENGINE reader OP ")


def test_run_empty_source(capsys):
    code, out, err = _run(capsys, "run", CORPUS / "empty.f90")
    assert (code, out, err) == (0, "", "")


def test_run_host_only_loop(capsys):
    code, out, _ = _run(capsys, "--mode", "run", CORPUS / "host_loop.f90",
                        "--bind", "n=2", "--bind", "a=3", "--bind", "x=[1,2]")
    assert code == 0 and out == "x = [3.0, 6.0]\n"


@pytest.mark.parametrize("path", NEGATIVE, ids=lambda p: p.stem)
def test_diagnostics_exit_1(path, capsys):
    code, out, err = _run(capsys, "compile", path, "--out", "/nonexistent/never-written")
    assert code == 1 and out == ""
    assert err.startswith(f"{path}:") and "error:" in err


def test_parse_error_is_located(capsys):
    code, _, err = _run(capsys, "compile", CORPUS / "negative" / "bad_index.f90")
    assert code == 1 and err.startswith(f"{CORPUS / 'negative' / 'bad_index.f90'}:9:5: error: index must be")


def test_missing_binding_exit_1(capsys):
    code, _, err = _run(capsys, "run", SAXPY, "--bind", "n=3")
    assert code == 1 and "missing binding for 'a'" in err and "missing binding for 'x'" in err


def test_missing_file_exit_1(tmp_path, capsys):
    code, _, err = _run(capsys, "compile", tmp_path / "nope.f90")
    assert code == 1 and "No such file" in err


@pytest.mark.parametrize("argv, message", [
    (["frobnicate", "x.f90", "y.f90"], "expected exactly one source file"),
    (["run", "x.f90", "--mode", "check"], "conflicting modes"),
    (["x.f90", "--bind", "novalue"], "is not NAME=VALUE"),
    (["x.f90", "--bind", "x=[1,2"], "cannot parse"),
    (["x.f90", "--tile-elems", "0"], "tile_elems must be >= 1"),
    (["x.f90", "--cores", "0"], "--cores must be >= 1"),
    (["x.f90", "--max-steps", "lots"], "invalid int value"),
])
def test_usage_errors_exit_1(argv, message, capsys):
    code, _, err = _run(capsys, *argv)
    assert code == 1 and message in err


@pytest.mark.parametrize("path", DEADLOCK, ids=lambda p: p.stem)
def test_deadlock_exit_2(path, capsys):
    code, out, err = _run(capsys, "run", path, "--max-steps", "100000")
    assert code == 2 and err.startswith("deadlock after") and "blocked in" in err


def test_step_budget_exit_2(capsys):
    code, _, err = _run(capsys, "run", SAXPY, "--max-steps", "10", "--bind", "n=3000", "--bind", "a=1",
                        "--bind", f"x=[{', '.join(['1'] * 3000)}]", "--bind", f"y=[{', '.join(['2'] * 3000)}]")
    assert code == 2 and "step budget of 10 exceeded" in err


def test_check_mismatch_exit_3(monkeypatch, capsys):
    real = device.exec_compute_op

    def off_by_one_ulp(op, a, b, reverse=False):
        r = real(op, a, b, reverse)
        return np.nextafter(r, np.float32(np.inf), dtype=np.float32) if op == "add_tiles" else r

    monkeypatch.setattr(device, "exec_compute_op", off_by_one_ulp)
    code, out, _ = _run(capsys, "check", SAXPY, "--bind", "n=4", "--bind", "a=2",
                        "--bind", "x=[1,2,3,4]", "--bind", "y=[1,1,1,1]")
    assert code == 3 and out.startswith("MISMATCH y[0]: oracle 3.0 simulator 3.0000002")


# -- dump ---------------------------------------------------------------------


def test_dump_after_each_pass_reparses(capsys):
    code, out, _ = _run(capsys, "dump", SAXPY)
    assert code == 0
    chunks = out.split("// after ")[1:]
    assert [c.split("\n", 1)[0] for c in chunks] == ["ftn_to_std", "offload_to_tt", "host_to_runtime"]
    for c in chunks:
        assert verify(parse_module(c.split("\n", 1)[1]), REG) == []


def test_dump_after_named_pass_to_dir(tmp_path, capsys):
    code, _, _ = _run(capsys, "dump", SAXPY, "--dump-after", "offload_to_tt", "--out", tmp_path)
    assert code == 0 and [p.name for p in tmp_path.iterdir()] == ["saxpy.offload_to_tt.tir"]


def test_custom_pipeline_and_unknown_pass(tmp_path, capsys):
    code, _, _ = _run(capsys, "compile", SAXPY, "--pipeline", "ftn_to_std", "--out", tmp_path)
    assert code == 0 and sorted(p.name for p in tmp_path.iterdir()) == [
        "saxpy.0-input.tir", "saxpy.1-ftn_to_std.tir", "saxpy.host.txt"]
    code, _, err = _run(capsys, "compile", SAXPY, "--pipeline", "ftn_to_std,vectorize")
    assert code == 1 and "unknown pass 'vectorize'" in err


# -- bindings -----------------------------------------------------------------


def test_binding_forms(tmp_path):
    np.array([1.5, -2], dtype="<f4").tofile(tmp_path / "v.bin")
    (tmp_path / "v.txt").write_text("1.5, -2\n 4")
    assert cli.parse_binding("n=7") == ("n", 7)
    assert cli.parse_binding("a = 2.5") == ("a", 2.5)
    assert cli.parse_binding(f"v=@{tmp_path / 'v.bin'}")[1].tolist() == [1.5, -2]
    assert cli.parse_binding(f"v=@{tmp_path / 'v.txt'}")[1].tolist() == [1.5, -2, 4]
    name, arr = cli.parse_binding("v=[0.1, 3]")
    assert arr.dtype == np.float32 and bits(arr).tolist() == bits([0.1, 3]).tolist()


def test_mode_flag_equivalent_to_positional():
    assert cli.parse_args(["--mode", "check", "a.f90"]) == cli.parse_args(["check", "a.f90"])


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "ftn_tt", "run", str(CORPUS / "deadlock" / "never_pushed.tir")],
                       capture_output=True, text=True)
    assert r.returncode == 2 and "cb 1" in r.stderr
