import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_specs, spec_from_pattern
from fastssc.compiler import (BASE_OPS, MERGED_OPS, SCENARIOS, Instruction, NodeLimits, Opcode,
                              Program, analyze_potentials, apply_merge_passes,
                              base_operation_count, compile_baseline, from_jsonl, is_low_stage,
                              program_stats, read_program, scenario_savings, to_jsonl,
                              write_program)
from fastssc.perf import latency
from fastssc.polar import CodeSpec, InvalidParameters, NodeRef, construct_5g

pes = st.sampled_from([4, 8, 16, 32])


def ops(p):
    return [(i.op.value, i.stage) for i in p.instructions]


def test_small_examples():
    assert ops(compile_baseline(CodeSpec(4, 4, ()), 4)) == [("RATE1", 2)]
    p = compile_baseline(construct_5g(8, 5), 4)
    assert ops(p) == [("F", 3), ("REP", 2), ("PR1", 3)]
    assert program_stats(p) == {"steps": 3, "ops": {"F": 1, "PR1": 1, "REP": 1}}
    assert program_stats(Program((), construct_5g(8, 5), 4)) == {"steps": 0, "ops": {}}


def test_emission_rules():
    # Left Rate-0 child with a Rate-1 / SPC right child folds into P01 / P0SPC.
    assert ops(compile_baseline(spec_from_pattern("FFFFIIII"), 4)) == [("P01", 3)]
    assert ops(compile_baseline(spec_from_pattern("FFFFFIII"), 4)) == [("P0SPC", 3)]
    assert ops(compile_baseline(spec_from_pattern("FFFIFIII"), 4)) == [("REPSPC", 3)]
    assert ops(compile_baseline(spec_from_pattern("FIFIIIII"), 4)) == \
        [("F", 3), ("F", 2), ("REP", 1), ("G", 2), ("REP", 1), ("C", 2), ("PR1", 3)]
    # A standalone SPC (left child of its parent) is a leaf instruction.
    assert ops(compile_baseline(spec_from_pattern("FIIIFFFI"), 4)) == \
        [("F", 3), ("SPC", 2), ("G", 3), ("REP", 2), ("C", 3)]
    # Rep above the size cap descends.
    p = compile_baseline(spec_from_pattern("F" * 31 + "I"), 4)
    assert ops(p) == [("G0", 5), ("REP", 4), ("C0", 5)]


def test_pe_validation():
    for pe in (0, 2, 3, 6, 12):
        with pytest.raises(InvalidParameters):
            compile_baseline(construct_5g(64, 32), pe)


def test_paper_scale_counts():
    p = compile_baseline(construct_5g(1024, 512), 64)
    assert abs(len(p) - 212) / 212 <= 0.03


def _mk(op, stage, index=0):
    return Instruction(Opcode(op), NodeRef(stage, index))


def test_merge_examples():
    spec = construct_5g(64, 32)
    # G at node v, F at its right child, F at that child's left child.
    g = _mk("G", 4, 0)
    f1 = _mk("F", 3, 1)
    f2 = _mk("F", 2, 2)
    m = apply_merge_passes(Program((g, f1, f2), spec, 16))
    assert [i.op.value for i in m.instructions] == ["GF", "F"]
    # Ascending chain: each C finishes a right child whose parent is combined next.
    chain = (Instruction(Opcode.C, NodeRef(2, 7)), Instruction(Opcode.C, NodeRef(3, 3)),
             Instruction(Opcode.C, NodeRef(4, 1)), Instruction(Opcode.C, NodeRef(5, 0)))
    m = apply_merge_passes(Program(chain, spec, 32))
    assert [i.op.value for i in m.instructions] == ["C3", "C"]
    # F runs are chunked from the tail: F F F -> F, F2.
    fs = (_mk("F", 4, 0), _mk("F", 3, 0), _mk("F", 2, 0))
    m = apply_merge_passes(Program(fs, spec, 16))
    assert [(i.op.value, len(i.subs)) for i in m.instructions] == [("F", 0), ("F2", 2)]


def test_merge_respects_threshold():
    spec = construct_5g(64, 32)
    fs = (_mk("F", 4, 0), _mk("F", 3, 0))
    assert [i.op.value for i in apply_merge_passes(Program(fs, spec, 8)).instructions] == ["F", "F"]
    assert [i.op.value for i in apply_merge_passes(Program(fs, spec, 16)).instructions] == ["F2"]


def _check_merged(base, merged):
    flat = []
    for ins in merged.instructions:
        if ins.merged:
            assert ins.op in MERGED_OPS
            assert all(s.op in BASE_OPS for s in ins.subs)
            for s in ins.subs:
                if s.op in (Opcode.F, Opcode.G, Opcode.G0, Opcode.C, Opcode.C0):
                    assert is_low_stage(s.op, s.node, merged.pe)
            assert ins.node == ins.subs[0].node
            flat.extend(ins.subs)
        else:
            assert ins.op in BASE_OPS
            flat.append(ins)
    assert tuple(flat) == base.instructions


@settings(max_examples=80, deadline=None)
@given(random_specs(max_n=8, min_n=2), pes)
def test_merge_is_a_regrouping(spec, pe):
    base = compile_baseline(spec, pe)
    merged = apply_merge_passes(base)
    _check_merged(base, merged)
    assert len(merged) <= len(base)
    assert base_operation_count(merged) == len(base)
    lb, lm = latency(base), latency(merged)
    assert lm.steps <= lb.steps and lm.cycles <= lb.cycles


@pytest.mark.parametrize("K", [256, 512, 768])
@pytest.mark.parametrize("pe", [16, 32, 64, 128, 256])
def test_merge_legality_paper_codes(K, pe):
    base = compile_baseline(construct_5g(1024, K), pe)
    _check_merged(base, apply_merge_passes(base))


def test_leaf_coverage():
    # Every leaf bit is produced exactly once: leaf instructions and fused
    # right children tile the non-Rate-0 part of the tree without overlap.
    for spec in (construct_5g(256, 100), spec_from_pattern("FFFIFIIIFIIIIIII")):
        p = compile_baseline(spec, 4)
        covered = np.zeros(spec.N, dtype=int)
        for ins in p.instructions:
            lo, hi = ins.node.span
            if ins.op in (Opcode.PR1, Opcode.PRSPC, Opcode.P01, Opcode.P0SPC):
                covered[ins.node.right.span[0]:hi] += 1
            elif ins.op not in (Opcode.F, Opcode.G, Opcode.G0, Opcode.C, Opcode.C0):
                covered[lo:hi] += 1
        assert (covered[~spec.frozen_mask] == 1).all()


def test_compile_deterministic():
    spec = construct_5g(1024, 512)
    a = to_jsonl(apply_merge_passes(compile_baseline(spec, 64)))
    b = to_jsonl(apply_merge_passes(compile_baseline(spec, 64)))
    assert a == b


def test_listing_format_and_round_trip(tmp_path):
    spec = construct_5g(256, 128)
    for merged in (False, True):
        p = compile_baseline(spec, 32)
        if merged:
            p = apply_merge_passes(p)
        path = tmp_path / f"p{merged}.jsonl"
        write_program(p, path)
        lines = path.read_text().splitlines()
        assert len(lines) == len(p)
        rec = json.loads(lines[0])
        assert list(rec) == ["step", "op", "stage", "node", "subs", "cycles"]
        assert read_program(path) == p
        assert from_jsonl(path.read_text(), spec, 32) == p
    with pytest.raises(InvalidParameters):
        from_jsonl('{"op": "F"}\n', spec, 32)
    (tmp_path / "bare.jsonl").write_text("")
    with pytest.raises(InvalidParameters):
        read_program(tmp_path / "bare.jsonl")


def test_potentials_examples():
    base = compile_baseline(construct_5g(1024, 512), 64)
    assert analyze_potentials(base, "G-F") == pytest.approx(8.58, abs=1.0)
    assert analyze_potentials(base, "Rep-RepSPC") == pytest.approx(4.48, abs=1.0)
    assert analyze_potentials(base, "Fx4") == 0.0
    with pytest.raises(InvalidParameters):
        analyze_potentials(base, "X-Y")
    with pytest.raises(InvalidParameters):
        analyze_potentials(apply_merge_passes(base), "G-F")


def test_potentials_counting_rules():
    spec = construct_5g(64, 32)
    fs = (_mk("F", 4, 0), _mk("F", 3, 0), _mk("F", 2, 0))
    p = Program(fs, spec, 16)
    # Overlapping windows: a run of three F has two F x2 windows and one F x3.
    assert scenario_savings(p, "Fx2") == 2
    assert scenario_savings(p, "Fx3") == 2
    assert scenario_savings(p, "Fx4") == 0
    # F-Rep does not count a node that is a Rep-Rate1 node.
    p = compile_baseline(spec_from_pattern("FFFIIIII"), 8)
    assert [i.op.value for i in p.instructions] == ["F", "REP", "PR1"]
    assert scenario_savings(p, "Rep-Rate1") == 1
    assert scenario_savings(p, "F-Rep") == 0


@settings(max_examples=40, deadline=None)
@given(random_specs(max_n=8, min_n=2), pes)
def test_potentials_nonnegative(spec, pe):
    base = compile_baseline(spec, pe)
    for sc in SCENARIOS:
        assert 0.0 <= analyze_potentials(base, sc) < 100.0


def test_node_limits_configurable():
    spec = spec_from_pattern("F" * 31 + "I")
    p = compile_baseline(spec, 4, NodeLimits(rep=None))
    assert ops(p) == [("REP", 5)]
