"""ftn -> func/arith/scf/memref.

Fortran's inclusive 1-based ``do i = lb, ub, step`` becomes the half-open
0-based ``scf.for j = lb-1 .. ub step``; array subscripts ``i`` become ``j``.
"""

from __future__ import annotations

from ..ir.core import DiagnosticError, Operation, Value, error, location_of
from ..ir.rewrite import Replacement, walk_replace
from ..ir.types import INDEX

def _const_int(v: Value) -> int | None:
    op = v.owner
    if isinstance(op, Operation) and op.name == "arith.constant" and isinstance(op.attributes.get("value"), int):
        return op.attributes["value"]
    return None


def _zero_based(idx: Value) -> tuple[list[Operation], Value]:
    """Ops computing idx - 1; folded for constants."""
    c = _const_int(idx)
    if c is not None:
        op = Operation("arith.constant", [], [INDEX], {"value": c - 1})
        return [op], op.result
    m1 = Operation("arith.constant", [], [INDEX], {"value": -1})
    add = Operation("arith.addi", [idx, m1.result], [INDEX])
    return [m1, add], add.result


def _rewrite(op: Operation):
    name = op.opname
    if name == "load":
        pre, idx = _zero_based(op.operands[1])
        return pre + [Operation("memref.load", [op.operands[0], idx], [op.results[0].type])]
    if name == "store":
        pre, idx = _zero_based(op.operands[2])
        return pre + [Operation("memref.store", [op.operands[0], op.operands[1], idx])]
    if name == "end":
        parent = op.parent.parent.parent if op.parent is not None and op.parent.parent else None
        if isinstance(parent, Operation) and parent.name == "ftn.do_loop":
            return [Operation("scf.yield")]
        return []
    if name == "do_loop":
        return _rewrite_loop(op)
    if name == "subroutine":
        # splice the body into the enclosing block
        return Replacement([o for b in op.regions[0].blocks for o in b.ops])
    raise DiagnosticError(error(f"unexpected ftn op {op.name}", location_of(op)))


def _rewrite_loop(op: Operation) -> list[Operation]:
    lb, ub, step = op.operands
    pre, lb0 = _zero_based(lb)
    region = op.regions[0]
    op.regions = []
    body = region.block
    iv = body.args[0]
    # the block argument now carries the 0-based index j = i - 1:
    # fold the "i - 1" subscripts produced above, rebuild i = j + 1 for any other use
    fold: dict[Value, Value] = {}
    for blk in _all_blocks(region):
        kept = []
        for o in blk.ops:
            if o.name == "arith.addi" and o.operands[0] is iv and _const_int(o.operands[1]) == -1:
                fold[o.results[0]] = iv
            else:
                kept.append(o)
        blk.ops = kept
    for o in region.walk():
        o.operands = [fold.get(v, v) for v in o.operands]
    for blk in _all_blocks(region):
        _drop_dead_constants(blk)
    if any(v is iv and not _is_subscript_use(o, v) for o in region.walk() for v in o.operands):
        one = Operation("arith.constant", [], [INDEX], {"value": 1})
        i1 = Operation("arith.addi", [iv, one.result], [INDEX])
        for o in region.walk():
            if not _is_subscript_use(o, iv):
                o.operands = [i1.result if v is iv else v for v in o.operands]
        ops = body.ops
        body.ops = []
        for o in [one, i1] + ops:
            body.append(o)
    loop = Operation("scf.for", [lb0, ub, step], [], regions=[region])
    return pre + [loop]


def _is_subscript_use(o: Operation, v: Value) -> bool:
    if o.name == "memref.load":
        return o.operands[1] is v and o.operands[0] is not v
    if o.name == "memref.store":
        return o.operands[2] is v and o.operands[0] is not v
    return False


def _drop_dead_constants(block) -> None:
    used = {v for o in block.walk() for v in o.operands}
    keep = [o for o in block.ops if not (o.name == "arith.constant" and o.results[0] not in used)]
    block.ops = keep


def pass_ftn_to_std(m, cfg=None):
    if not any(op.dialect == "ftn" for op in m.walk()):
        return m.clone()
    out = walk_replace(m, lambda op: op.dialect == "ftn", _rewrite)
    for f in out.functions:
        for block in _all_blocks(f.body):
            _drop_dead_constants(block)
    return out


def _all_blocks(region):
    for b in region.blocks:
        yield b
        for o in b.ops:
            for r in o.regions:
                yield from _all_blocks(r)
