import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_specs
from fastssc.polar import (CodeSpec, InvalidParameters, NodeKind, NodeRef, UnsupportedLength,
                           classify, construct_5g, encode, polar_transform, reliability_sequence)
from fastssc.sc import sc_decode


def test_bundled_sequence_is_a_permutation():
    seq = reliability_sequence()
    assert len(seq) == 1024
    assert sorted(seq.tolist()) == list(range(1024))
    # Index 0 is the least reliable position and N-1 the most reliable.
    assert seq[0] == 0 and seq[-1] == 1023


def test_construct_examples():
    assert construct_5g(8, 5).frozen == (0, 1, 2)
    assert construct_5g(8, 8).frozen == ()
    s16 = construct_5g(16, 10)
    assert len(s16.frozen) == 6 and {0, 1, 2} <= set(s16.frozen)


def test_construct_is_nested_and_deterministic():
    # 5G construction freezes the least reliable positions, so higher K is a subset.
    for K in range(1, 64):
        a = set(construct_5g(64, K).frozen)
        b = set(construct_5g(64, K + 1).frozen)
        assert b <= a
    assert construct_5g(1024, 512) == construct_5g(1024, 512)


def test_construct_errors():
    with pytest.raises(InvalidParameters):
        construct_5g(8, 9)
    with pytest.raises(InvalidParameters):
        construct_5g(12, 4)
    with pytest.raises(UnsupportedLength):
        construct_5g(2048, 1024)


def test_codespec_validation():
    with pytest.raises(InvalidParameters):
        CodeSpec(8, 5, (0, 1))
    with pytest.raises(InvalidParameters):
        CodeSpec(8, 5, (0, 1, 8))
    with pytest.raises(InvalidParameters):
        CodeSpec(8, 5, (0, 0, 1))
    with pytest.raises(InvalidParameters):
        CodeSpec(8, 0, tuple(range(8)))


def test_json_round_trip(tmp_path):
    spec = construct_5g(32, 12)
    path = tmp_path / "s.json"
    path.write_text(spec.to_json())
    assert CodeSpec.load(path) == spec
    with pytest.raises(InvalidParameters):
        CodeSpec.from_json('{"N": 8}')


def _generator(n):
    G = np.array([[1]], dtype=np.uint8)
    for _ in range(n):
        G = np.block([[G, np.zeros_like(G)], [G, G]])
    return G


def test_encode_examples():
    spec = CodeSpec(4, 4, ())
    assert encode(spec, [0, 0, 1, 1]).tolist() == [0, 1, 0, 1]
    assert not encode(construct_5g(64, 20), np.zeros(20)).any()
    with pytest.raises(InvalidParameters):
        encode(spec, [1, 0])


@given(st.integers(1, 7), st.data())
def test_transform_matches_generator_matrix(n, data):
    N = 1 << n
    u = np.array(data.draw(st.lists(st.integers(0, 1), min_size=N, max_size=N)), dtype=np.uint8)
    expected = (u.astype(int) @ _generator(n)) % 2
    assert polar_transform(u).tolist() == expected.tolist()


@given(st.integers(0, 8), st.data())
def test_encoder_involution(n, data):
    N = 1 << n
    u = np.array(data.draw(st.lists(st.integers(0, 1), min_size=N, max_size=N)), dtype=np.uint8)
    assert (polar_transform(polar_transform(u)) == u).all()


@settings(max_examples=60)
@given(random_specs(max_n=7), st.floats(0.1, 50.0), st.data())
def test_noiseless_round_trip(spec, amp, data):
    info = np.array(data.draw(st.lists(st.integers(0, 1), min_size=spec.K, max_size=spec.K)),
                    dtype=np.uint8)
    x = encode(spec, info)
    u_hat, x_hat = sc_decode(spec, amp * (1.0 - 2.0 * x))
    assert (u_hat[spec.info_indices] == info).all()
    assert (x_hat == x).all()


def test_classify_examples():
    from conftest import spec_from_pattern
    root = lambda s: NodeRef(s.n, 0)
    from fastssc.polar import classify_pattern
    cases = {"FFFI": NodeKind.REP, "FIII": NodeKind.SPC, "FFII": NodeKind.ML,
             "FFFF": NodeKind.RATE0, "IIII": NodeKind.RATE1, "FIFI": NodeKind.RATER,
             "FI": NodeKind.REP, "F": NodeKind.RATE0, "I": NodeKind.RATE1,
             "FFFFFFFI": NodeKind.REP, "FIIIIIII": NodeKind.SPC, "FFFIFIII": NodeKind.RATER}
    for pattern, kind in cases.items():
        # Append an info half so that all-frozen patterns still form a valid code.
        s = spec_from_pattern(pattern + "I" * len(pattern))
        assert classify(s, root(s).left) is kind, pattern
        assert classify_pattern(pattern) is kind
    with pytest.raises(InvalidParameters):
        classify(construct_5g(8, 4), NodeRef(2, 2))


@settings(max_examples=50)
@given(random_specs(max_n=7))
def test_classify_structural_consistency(spec):
    for stage in range(1, spec.n + 1):
        for index in range(spec.N >> stage):
            node = NodeRef(stage, index)
            kind = classify(spec, node)
            if kind in (NodeKind.RATE0, NodeKind.RATE1):
                assert classify(spec, node.left) is kind
                assert classify(spec, node.right) is kind


def test_noderef_geometry():
    v = NodeRef(3, 2)
    assert v.span == (16, 24) and v.size == 8
    assert v.left == NodeRef(2, 4) and v.right == NodeRef(2, 5)
    assert v.left.parent == v and v.right.parent == v
