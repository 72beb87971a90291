import numpy as np
import pytest

from conftest import DEADLOCK, GOLDEN, HAND_IR, POSITIVE, SAXPY, check_golden, load, random_inputs
from ftn_tt.dialects import KERNEL_KIND_ATTR, register_builtin_dialects
from ftn_tt.emitter import emit_all_device_sources, emit_device_source, emit_host_program, static_host_trace
from ftn_tt.ir import F32, I32, INDEX, TILE, Builder, DiagnosticError, Function, Module
from ftn_tt.passes import run_pipeline
from ftn_tt.sim import replay_host, run_host

REG = register_builtin_dialects()
DEVICE_DIALECTS = ("tt_dm", "tt_cb", "tt_compute")
TEAMS2 = SAXPY.parent / "saxpy_teams2.f90"


def _final(path):
    return run_pipeline(load(path)).module


def _golden_programs():
    return [(p.stem, p) for p in POSITIVE + HAND_IR]


# -- golden device sources ---------------------------------------------------


@pytest.mark.parametrize("stem, path", _golden_programs(), ids=lambda x: x if isinstance(x, str) else "")
def test_device_source_golden(stem, path):
    m = _final(path)
    for u in emit_all_device_sources(m):
        check_golden(f"{stem}/{u.filename}", u.text)
    check_golden(f"{stem}/{stem}.host.txt", static_host_trace(m))


def test_saxpy_compute_kernel_lines():
    u = emit_device_source(_final(SAXPY), "saxpy_offload0_compute")
    lines = [ln.strip() for ln in u.text.splitlines()]
    assert u.kind == "compute" and u.filename == "saxpy_offload0_compute.cpp.txt"
    assert "Tile t12 = mul_scalar_tile(t10, a);" in lines
    assert "Tile t13 = add_tiles(t12, t11);" in lines
    assert "pack_tile(t13, 2);" in lines
    assert lines[:4] == ["// @saxpy_offload0_compute: compute kernel", '#include "mock_metalium.h"', "",
                         "void kernel_main() {"]


def test_reader_and_writer_line_mapping():
    m = _final(SAXPY)
    reader = emit_device_source(m, "saxpy_offload0_reader").text
    writer = emit_device_source(m, "saxpy_offload0_writer").text
    assert "noc_async_read_tile(buf_x, v12, get_write_ptr(0), v7, 0.0f);\n        noc_async_read_barrier();" in reader
    assert "noc_async_write_tile(buf_y, v12, get_read_ptr(2), v7);\n        noc_async_write_barrier();" in writer
    assert "for (uint32_t i0 = v9; i0 < v8; i0 += v10) {" in reader


def test_emission_is_deterministic():
    a = [u.text for u in emit_all_device_sources(_final(TEAMS2))]
    b = [u.text for u in emit_all_device_sources(_final(TEAMS2))]
    assert a == b


def test_empty_kernel_has_prologue_and_epilogue_only():
    f = Function("nothing", [], attributes={KERNEL_KIND_ATTR: "writer"})
    Builder(f.entry).op("func.return")
    u = emit_device_source(Module([f]), "nothing")
    assert u.text == '// @nothing: writer kernel\n#include "mock_metalium.h"\n\nvoid kernel_main() {\n}\n'
    assert u.api_calls == ()


def test_host_op_in_kernel_rejected():
    f = Function("k", [], attributes={KERNEL_KIND_ATTR: "reader"})
    b = Builder(f.entry)
    b.op("tt_host.launch")
    b.op("func.return")
    with pytest.raises(DiagnosticError, match="host op inside device kernel @k"):
        emit_device_source(Module([f]), "k")


def test_non_kernel_rejected():
    with pytest.raises(DiagnosticError, match="@saxpy is not a device kernel"):
        emit_device_source(_final(SAXPY), "saxpy")


def _one_op_kernel(name, operands, result=None, attrs=None):
    f = Function("k", [I32, INDEX, F32], attributes={KERNEL_KIND_ATTR: "compute"})
    b = Builder(f.entry)
    tile = b.value("tt_cb.read_slot", [], TILE, {"cb": 0})
    env = {"buf": f.args[0], "idx": f.args[1], "f32": f.args[2], "tile": tile}
    b.op(name, [env[o] for o in operands], [result] if result else [], attrs or {})
    b.op("func.return")
    return Module([f])


_DEVICE_OP_API = {
    "tt_dm.read_tile": (["buf", "idx", "idx"], None, {"cb": 0, "pad": 0.0}, "noc_async_read_tile"),
    "tt_dm.write_tile": (["buf", "idx", "idx"], None, {"cb": 0}, "noc_async_write_tile"),
    "tt_dm.barrier": ([], None, {}, "noc_async_full_barrier"),
    "tt_cb.reserve": ([], None, {"cb": 0, "n": 1}, "cb_reserve_back"),
    "tt_cb.push": ([], None, {"cb": 0, "n": 1}, "cb_push_back"),
    "tt_cb.wait": ([], None, {"cb": 0, "n": 1}, "cb_wait_front"),
    "tt_cb.pop": ([], None, {"cb": 0, "n": 1}, "cb_pop_front"),
    "tt_cb.write_slot": (["tile"], None, {"cb": 0}, "cb_write_slot"),
    "tt_cb.read_slot": ([], TILE, {"cb": 0}, "cb_read_slot"),
    "tt_compute.init": ([], None, {}, "compute_kernel_init"),
    "tt_compute.copy_in": ([], TILE, {"cb": 0}, "copy_tile"),
    "tt_compute.pack_out": (["tile"], None, {"cb": 1}, "pack_tile"),
    **{f"tt_compute.{o}_tiles": (["tile", "tile"], TILE, {}, f"{o}_tiles") for o in ("add", "sub", "mul", "div")},
    **{f"tt_compute.{o}_scalar": (["tile", "f32"], TILE, {}, f"{o}_scalar_tile") for o in ("add", "sub", "mul", "div")},
}


def test_device_op_table_is_complete():
    device_ops = {s.name for s in REG.specs.values() if s.dialect in DEVICE_DIALECTS}
    assert set(_DEVICE_OP_API) == device_ops


@pytest.mark.parametrize("opname", sorted(_DEVICE_OP_API))
def test_every_device_op_maps_to_an_api_call(opname):
    operands, result, attrs, api = _DEVICE_OP_API[opname]
    m = _one_op_kernel(opname, operands, result, attrs)
    u = emit_device_source(m, "k")
    assert api in u.api_calls
    assert any(line.strip().startswith(api) or f"= {api}(" in line for line in u.text.splitlines())


def test_reverse_scalar_op_uses_reversed_intrinsic():
    m = _one_op_kernel("tt_compute.div_scalar", ["tile", "f32"], TILE, {"reverse": 1})
    assert "rdiv_scalar_tile" in emit_device_source(m, "k").api_calls


def test_goldens_cover_every_device_op():
    seen = set()
    for _, path in _golden_programs():
        seen |= {op.name for op in _final(path).walk() if op.dialect in DEVICE_DIALECTS}
    device_ops = {s.name for s in REG.specs.values() if s.dialect in DEVICE_DIALECTS}
    assert device_ops <= seen
    assert (GOLDEN / "slots" / "sq_compute.cpp.txt").exists()


# -- host programs --------------------------------------------------------------


def _saxpy_data(n, rng=None):
    rng = rng or np.random.default_rng(0)
    return {"a": 2.0, "x": rng.random(n, dtype=np.float32), "y": rng.random(n, dtype=np.float32), "n": n}


def test_saxpy_host_program_prefix():
    p = emit_host_program(_final(TEAMS2), _saxpy_data(2500))
    head = [(c.abi, c.ints, c.payload) for c in p.calls[:5]]
    assert head == [
        ("tt_rt_open_device", (), None),
        ("tt_rt_create_buffer", (10000,), None),
        ("tt_rt_create_buffer", (10000,), None),
        ("tt_rt_write_buffer", (0,), "x"),
        ("tt_rt_write_buffer", (1,), "y"),
    ]
    assert [c.abi for c in p.calls[-4:]] == ["tt_rt_launch", "tt_rt_wait", "tt_rt_read_buffer", "tt_rt_close_device"]
    check_golden("saxpy_teams2/saxpy_teams2.n2500.host.txt", p.trace())


def test_empty_module_host_program():
    p = emit_host_program(Module(), {})
    assert p.calls == [] and p.trace() == ""


def test_missing_payload_names_argument():
    data = _saxpy_data(16)
    del data["x"]
    with pytest.raises(DiagnosticError, match="missing binding for 'x'"):
        emit_host_program(_final(SAXPY), data)


def test_payload_length_mismatch():
    data = _saxpy_data(16)
    data["x"] = data["x"][:10]
    with pytest.raises(DiagnosticError, match="payload 'x' has 10 element"):
        emit_host_program(_final(SAXPY), data)


def test_host_program_is_deterministic():
    a = emit_host_program(_final(TEAMS2), _saxpy_data(3000)).trace()
    b = emit_host_program(_final(TEAMS2), _saxpy_data(3000)).trace()
    assert a == b


def test_host_program_ids_are_created_before_use():
    p = emit_host_program(_final(SAXPY.parent / "two_regions.f90"),
                          random_inputs(_final(SAXPY.parent / "two_regions.f90").functions[0], 50,
                                        np.random.default_rng(0)))
    created = set()
    for c in p.calls:
        if c.abi == "tt_rt_create_buffer":
            created.add(c.result)
        elif c.abi in ("tt_rt_write_buffer", "tt_rt_read_buffer"):
            assert c.ints[0] in created


@pytest.mark.parametrize("path", POSITIVE, ids=lambda p: p.stem)
def test_host_program_replays_like_direct_execution(path):
    m = _final(path)
    f = m.functions[0] if m.functions else None
    n = 100 if path.stem == "fixed_trip" else 1500  # declared dimension(100)
    data = random_inputs(f, n, np.random.default_rng(7)) if f else {}
    p = emit_host_program(m, data)
    replay = replay_host(p)
    direct = run_host(m, data).outputs
    for name, arr in direct.items():
        if any(c.payload == name for c in p.calls):
            assert np.array_equal(replay.outputs[name].view(np.uint32), arr.view(np.uint32)), name


def test_deadlock_corpus_kernels_emit():
    for path in DEADLOCK:
        for u in emit_all_device_sources(load(path)):
            assert u.text.endswith("}\n")
