import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import POSITIVE, SAXPY, load, random_inputs
from fortgen import random_program
from ftn_tt.config import DeviceConfig
from ftn_tt.dialects import KERNEL_KIND_ATTR, register_builtin_dialects
from ftn_tt.frontend import compile_source
from ftn_tt.ir import DiagnosticError, Module, print_module, structurally_equal, verify
from ftn_tt.passes import (
    DEFAULT_PIPELINE,
    PassPipeline,
    PipelineError,
    compute_tile_partition,
    match_elementwise,
    pass_ftn_to_std,
    pass_host_to_runtime,
    pass_offload_to_tt,
    run_pipeline,
)
from ftn_tt.passes.elementwise import Apply, Input, Scalar
from ftn_tt.passes import pipeline as pipeline_mod
from ftn_tt.sim import interpret_std, run_host
from ftn_tt.sim.interp import entry_function

REG = register_builtin_dialects()
CORPUS_DIR = SAXPY.parent


def _std(path_or_src):
    src = path_or_src.read_text() if hasattr(path_or_src, "read_text") else path_or_src
    return pass_ftn_to_std(compile_source(src))


def _target(m):
    return next(op for op in m.walk() if op.name == "offload.target")


def _names(m):
    return Counter(op.name for op in m.walk())


# -- ftn_to_std ------------------------------------------------------------------


def test_ftn_to_std_saxpy():
    m = _std(SAXPY)
    names = _names(m)
    assert names["scf.for"] == 1 and names["memref.load"] == 2 and names["memref.store"] == 1
    assert names["arith.mulf"] == 1 and names["arith.addf"] == 1
    assert not any(n.startswith("ftn.") for n in names)
    assert names["offload.target"] == 1
    assert verify(m, REG) == []


def test_ftn_to_std_zero_based_bounds():
    m = _std(SAXPY)
    loop = next(op for op in m.walk() if op.name == "scf.for")
    lb, ub, step = (v.owner for v in loop.operands)
    assert lb.attributes["value"] == 0 and step.attributes["value"] == 1
    assert ub.name == "arith.index_cast"


def test_ftn_to_std_identity_without_ftn_ops():
    m = _std(SAXPY)
    again = pass_ftn_to_std(m)
    assert again is not m and structurally_equal(again, m)


def test_ftn_to_std_host_loop_semantics():
    m = _std(CORPUS_DIR / "host_loop.f90")
    inputs = random_inputs(entry_function(m), 37, np.random.default_rng(1))
    out = interpret_std(m, inputs)
    assert np.array_equal(out["x"], np.float32(inputs["a"]) * inputs["x"])


def test_ftn_to_std_fixed_trip_semantics():
    m = _std(CORPUS_DIR / "fixed_trip.f90")
    inputs = random_inputs(entry_function(m), 100, np.random.default_rng(2))
    out = interpret_std(m, inputs)
    assert np.array_equal(out["y"], inputs["x"] * inputs["y"])


# -- match_elementwise ------------------------------------------------------------


def test_match_saxpy_dag():
    dag = match_elementwise(_target(_std(SAXPY)))
    # operands of the target: a=0, x=1, y=2, n=3
    assert dag.inputs == [(1, "to"), (2, "tofrom")]
    assert dag.scalars == [0]
    assert dag.output == 2
    assert dag.expr == Apply("add", Apply("mul", Scalar(0), Input(1)), Input(2))
    assert dag.trip_count == ("operand", 3)
    assert not dag.has_div


def test_match_copy_is_identity_chain():
    dag = match_elementwise(_target(_std(CORPUS_DIR / "copy.f90")))
    assert isinstance(dag.expr, Input) and dag.inputs == [(dag.expr.operand, "to")]


def test_match_divide_has_div():
    assert match_elementwise(_target(_std(CORPUS_DIR / "divide.f90"))).has_div


def test_match_fixed_trip_literal():
    assert match_elementwise(_target(_std(CORPUS_DIR / "fixed_trip.f90"))).trip_count == 100


def test_match_rejects_reduction():
    with pytest.raises(DiagnosticError, match=r"unsupported offload body: scalar updated inside the loop"):
        match_elementwise(_target(_std(CORPUS_DIR / "negative" / "reduction.f90")))


@pytest.mark.parametrize(
    "body, why",
    [
        ("y(i) = 2.0", "stored value reads no array element"),
        ("y(i) = x(i)\n    x(i) = y(i)", "expected exactly one array store, found 2"),
    ],
)
def test_match_rejects_non_elementwise(body, why):
    src = f"""subroutine f(x, y, n)
  real, dimension(n) :: x, y
  integer :: n
  integer :: i
  !$omp target parallel do
  do i = 1, n
    {body}
  end do
  !$omp end target parallel do
end subroutine
"""
    with pytest.raises(DiagnosticError, match=why):
        match_elementwise(_target(_std(src)))


def test_match_rejects_nested_loop():
    src = """subroutine f(x, n)
  real, dimension(n) :: x
  integer :: n
  integer :: i, j
  !$omp target parallel do
  do i = 1, n
    do j = 1, n
      x(j) = x(j) + 1.0
    end do
  end do
  !$omp end target parallel do
end subroutine
"""
    with pytest.raises(DiagnosticError, match="unsupported offload body: nested loops and control flow are not supported"):
        match_elementwise(_target(_std(src)))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 64))
def test_dag_evaluation_commutes_with_interpretation(seed, n):
    p = random_program(seed)
    m = _std(p.source)
    target = _target(m)
    dag = match_elementwise(target)
    rng = np.random.default_rng(seed)
    inputs = p.inputs(n, rng)
    out = interpret_std(m, inputs)
    f = m.functions[0]
    names = f.attributes["arg_names"]
    arrays = {i: np.asarray(inputs[names[i]], dtype=np.float32) for i in range(len(names)) if names[i] in p.arrays}
    scalars = {i: np.float32(inputs[names[i]]) for i in dag.scalars}
    got = np.array([dag.evaluate(arrays, scalars, i) for i in range(n)], dtype=np.float32)
    assert np.array_equal(got.view(np.uint32), out[names[dag.output]].view(np.uint32))
    assert dag.has_div == p.has_div


# -- partition ----------------------------------------------------------------------


@pytest.mark.parametrize(
    "n, tile, cores, total, assignments, tail",
    [
        (2500, 1024, 2, 3, ((0, 2), (2, 1)), 452),
        (1024, 1024, 1, 1, ((0, 1),), 0),
        (0, 1024, 4, 0, ((0, 0),) * 4, 0),
    ],
)
def test_partition_examples(n, tile, cores, total, assignments, tail):
    p = compute_tile_partition(n, tile, cores)
    assert (p.total_tiles, p.assignments, p.tail_len) == (total, assignments, tail)


def test_partition_rejects_bad_requests():
    for args in ((-1, 16, 1), (5, 0, 1), (5, 16, 0)):
        with pytest.raises(ValueError):
            compute_tile_partition(*args)


def brute_force_partition_ok(n: int, tile: int, cores: int, p) -> bool:
    """Independent check by enumerating tiles one at a time."""
    tiles = 0
    while tiles * tile < n:
        tiles += 1
    owner = {}
    for c, (start, count) in enumerate(p.assignments):
        for t in range(start, start + count):
            if t in owner:
                return False  # overlap
            owner[t] = c
    if sorted(owner) != list(range(tiles)) or p.total_tiles != tiles:
        return False
    counts = [count for _, count in p.assignments]
    if len(counts) != cores or max(counts) - min(counts) > 1 or counts != sorted(counts, reverse=True):
        return False
    # contiguous and ascending by core
    pos = 0
    for start, count in p.assignments:
        if start != pos:
            return False
        pos += count
    last = n - (tiles - 1) * tile if tiles else 0
    return p.tail_len == (0 if last == tile else last)


@settings(max_examples=400, deadline=None)
@given(st.integers(0, 10000), st.sampled_from([16, 1024]), st.integers(1, 16))
def test_partition_property(n, tile, cores):
    assert brute_force_partition_ok(n, tile, cores, compute_tile_partition(n, tile, cores))


@pytest.mark.parametrize("teams", [1, 2, 3, 8])
@pytest.mark.parametrize("n", [0, 1, 1023, 1024, 1025, 2500, 9000])
def test_host_ir_partition_matches_oracle(teams, n):
    """The partition arithmetic emitted into the host function agrees with the library."""
    src = (CORPUS_DIR / "saxpy_teams2.f90").read_text().replace("num_teams(2)", f"num_teams({teams})")
    final = run_pipeline(compile_source(src)).module
    inputs = random_inputs(entry_function(final), n, np.random.default_rng(0))
    calls = run_host(final, inputs, execute=False).calls
    per_core = {}
    for c in calls:
        if c.abi == "tt_rt_set_runtime_args" and c.kernel.endswith("_reader"):
            # (core, buf_x, buf_y, start_tile, num_tiles, n)
            per_core[c.ints[0]] = (c.ints[3], c.ints[4])
    p = compute_tile_partition(n, 1024, teams)
    assert tuple(per_core[c] for c in range(teams)) == p.assignments


# -- offload_to_tt --------------------------------------------------------------


def test_offload_snapshot_two_teams():
    m = pass_offload_to_tt(_std(CORPUS_DIR / "saxpy_teams2.f90"))
    host, *kernels = m.functions
    assert [k.attributes[KERNEL_KIND_ATTR] for k in kernels] == ["reader", "compute", "writer"]
    assert all(k.attributes["tt.num_teams"] == 2 for k in kernels)
    names = _names(m)
    assert "offload.target" not in names
    assert names["tt_host.open_device"] == names["tt_host.close_device"] == 1
    assert names["tt_host.create_buffer"] == 2
    assert names["tt_host.write_buffer"] == 2 and names["tt_host.read_buffer"] == 1
    assert names["tt_host.create_cb"] == 6  # x, y_in, out on each of 2 cores
    assert names["tt_host.create_kernel"] == 6 and names["tt_host.set_runtime_args"] == 6
    assert m.attributes["tt.tile_elems"] == 1024
    calls = run_host(pass_host_to_runtime(m), random_inputs(host, 10, np.random.default_rng(0)),
                     execute=False).calls
    cbs = [c.ints for c in calls if c.abi == "tt_rt_create_cb"]
    assert cbs == [(core, cb, 2) for core in (0, 1) for cb in (0, 1, 2)]


def test_offload_kernel_dialects():
    m = pass_offload_to_tt(_std(SAXPY))
    allowed = {
        "reader": {"tt_dm", "arith", "scf", "func"},
        "compute": {"tt_cb", "tt_compute", "arith", "scf", "func"},
        "writer": {"tt_dm", "arith", "scf", "func"},
    }
    for f in m.functions[1:]:
        assert {op.dialect for op in f.walk()} <= allowed[f.attributes[KERNEL_KIND_ATTR]]
        assert f.attributes["tt.num_threads"] == 20 and f.attributes["tt.simdlen"] == 32


def test_offload_single_core_small_n_trace():
    final = run_pipeline(load(SAXPY)).module
    inputs = random_inputs(final.functions[0], 700, np.random.default_rng(3))
    trace = []
    run_host(final, inputs, DeviceConfig(), trace=trace)
    ops = Counter(line.split(" OP ")[1].split()[0] for line in trace)
    assert ops["tt_dm.read_tile"] == 2
    assert ops["tt_compute.mul_scalar"] == 1 and ops["tt_compute.add_tiles"] == 1
    assert ops["tt_compute.pack_out"] == 1
    assert ops["tt_dm.write_tile"] == 1


def test_offload_pad_value_follows_division():
    for name, pad in (("divide.f90", 1.0), ("vadd.f90", 0.0)):
        m = pass_offload_to_tt(_std(CORPUS_DIR / name))
        pads = {op.attributes["pad"] for op in m.walk() if op.name == "tt_dm.read_tile"}
        assert pads == {pad}


def test_offload_rejects_too_many_teams():
    src = SAXPY.read_text().replace("num_threads(20)", "num_teams(200) num_threads(20)")
    with pytest.raises(DiagnosticError, match=r"num_teams\(200\) exceeds the 128 cores"):
        pass_offload_to_tt(_std(src))
    # a larger device accepts it
    assert pass_offload_to_tt(_std(src), DeviceConfig(num_cores=256)) is not None


def test_offload_rejects_simdlen_not_dividing_tile():
    src = SAXPY.read_text().replace("simdlen(32)", "simdlen(48)")
    with pytest.raises(DiagnosticError, match=r"simdlen\(48\) does not divide the tile width 1024"):
        pass_offload_to_tt(_std(src))
    assert pass_offload_to_tt(_std(src), DeviceConfig(tile_elems=48 * 4)) is not None


def test_offload_identity_without_regions():
    m = _std(CORPUS_DIR / "host_loop.f90")
    out = pass_offload_to_tt(m)
    assert structurally_equal(out, m) and "tt.tile_elems" not in out.attributes


# -- host_to_runtime --------------------------------------------------------------


def test_host_to_runtime_renames():
    m = pass_host_to_runtime(pass_offload_to_tt(_std(SAXPY)))
    host = m.functions[0]
    callees = [op.attributes["callee"].name for op in host.walk() if op.name == "func.call"]
    assert callees[0] == "tt_rt_open_device" and callees[-1] == "tt_rt_close_device"
    assert "tt_rt_launch" in callees
    assert not any(op.dialect == "tt_host" for op in m.walk())
    # device functions untouched
    before = pass_offload_to_tt(_std(SAXPY))
    for a, b in zip(before.functions[1:], m.functions[1:]):
        assert print_module(Module([a])) == print_module(Module([b]))


def test_host_to_runtime_identity():
    m = _std(CORPUS_DIR / "host_loop.f90")
    assert structurally_equal(pass_host_to_runtime(m), m)


# -- pipeline -----------------------------------------------------------------------


def test_default_pipeline_saxpy_census():
    r = run_pipeline(load(SAXPY))
    assert [n for n, _ in r.stages] == ["input", *DEFAULT_PIPELINE]
    dialects = {op.dialect for op in r.module.walk()}
    assert dialects <= {"func", "arith", "scf", "memref", "tt_dm", "tt_cb", "tt_compute"}
    assert verify(r.module, REG) == []


@pytest.mark.parametrize("path", POSITIVE, ids=lambda p: p.stem)
def test_census_every_corpus_program(path):
    r = run_pipeline(load(path))
    assert not {op.dialect for op in r.module.walk()} & {"ftn", "offload", "tt_host"}
    for _, m in r.stages:
        assert verify(m, REG) == []


def test_empty_pipeline_is_identity():
    m = load(SAXPY)
    r = run_pipeline(m, PassPipeline([]))
    assert r.module is m and r.dumps == {}


def test_unknown_pass_rejected_before_running(monkeypatch):
    ran = []
    monkeypatch.setitem(pipeline_mod.PASSES, "ftn_to_std", lambda m, cfg: ran.append(1) or pass_ftn_to_std(m))
    with pytest.raises(PipelineError, match="unknown pass 'fuse_all'"):
        run_pipeline(load(SAXPY), PassPipeline(["ftn_to_std", "fuse_all"]))
    assert ran == []


def test_dump_after_selected_passes():
    r = run_pipeline(load(SAXPY), PassPipeline(list(DEFAULT_PIPELINE), {"offload_to_tt"}))
    assert list(r.dumps) == ["offload_to_tt"]
    assert r.dumps["offload_to_tt"] == print_module(r.stages[2][1])
    r = run_pipeline(load(SAXPY), PassPipeline(list(DEFAULT_PIPELINE), {"all"}))
    assert list(r.dumps) == list(DEFAULT_PIPELINE)


def test_failed_verification_names_the_pass(monkeypatch):
    def broken(m, cfg):
        out = pass_ftn_to_std(m)
        next(op for op in out.walk() if op.name == "offload.target").attributes.pop("map_to")
        return out

    monkeypatch.setitem(pipeline_mod.PASSES, "ftn_to_std", broken)
    with pytest.raises(PipelineError) as e:
        run_pipeline(load(SAXPY))
    assert e.value.pass_name == "ftn_to_std"
    assert e.value.diagnostics[0].message == "after ftn_to_std: offload.target: missing required attribute 'map_to'"
    assert e.value.diagnostics[0].location is not None


def test_pass_diagnostics_are_attributed():
    with pytest.raises(PipelineError) as e:
        run_pipeline(load(CORPUS_DIR / "negative" / "reduction.f90"))
    assert e.value.pass_name == "offload_to_tt"


def test_passes_do_not_mutate_input():
    m = load(SAXPY)
    before = print_module(m)
    run_pipeline(m)
    assert print_module(m) == before


def test_partition_total_is_ceil():
    for n in (1, 1023, 1024, 1025):
        assert compute_tile_partition(n, 1024, 3).total_tiles == math.ceil(n / 1024)
