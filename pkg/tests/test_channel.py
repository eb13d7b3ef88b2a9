import math

import numpy as np
import pytest

from fastssc.channel import (SimReport, StopRule, awgn_llrs, ebno_at_fer, montecarlo,
                             noise_variance)
from fastssc.compiler import apply_merge_passes, compile_baseline
from fastssc.polar import InvalidParameters, construct_5g
from fastssc.vm import QuantSpec


def test_awgn_high_snr_signs(rng):
    c = rng.integers(0, 2, 1000)
    llr = awgn_llrs(c, 60.0, 0.5, rng)
    assert (np.sign(llr) == 1 - 2 * c).all()


def test_awgn_determinism():
    c = np.zeros(64)
    a = awgn_llrs(c, 1.0, 0.5, np.random.default_rng(5))
    b = awgn_llrs(c, 1.0, 0.5, np.random.default_rng(5))
    assert (a == b).all()


def test_awgn_moments():
    rng = np.random.default_rng(0)
    c = rng.integers(0, 2, 100_000)
    ebno, rate = 2.0, 0.5
    var = noise_variance(ebno, rate)
    v = awgn_llrs(c, ebno, rate, rng) * (1 - 2 * c)
    # LLR * (1-2b) = 2/var + 2n/var, with standard deviation 2/sqrt(var).
    se = (2 / math.sqrt(var)) / math.sqrt(len(c))
    assert abs(v.mean() - 2 / var) < 3 * se
    assert v.std() == pytest.approx(2 / math.sqrt(var), rel=0.02)


@pytest.fixture(scope="module")
def small():
    spec = construct_5g(128, 64)
    return spec, apply_merge_passes(compile_baseline(spec, 16))


def test_report_contract(small):
    spec, p = small
    rep = montecarlo(spec, p, QuantSpec(), [0.0, 2.0, 4.0], StopRule(50, 3000), seed=3,
                     batch_size=500)
    assert len(rep.points) == 3
    for pt in rep.points:
        assert pt.frame_errors <= pt.frames <= 3000
        assert pt.bit_errors <= pt.frames * spec.K
        assert pt.frame_errors >= 50 or pt.frames == 3000
    fers = [pt.fer for pt in rep.points]
    assert fers[0] > fers[1] > fers[2]
    csv = rep.to_csv().splitlines()
    assert csv[0] == "ebno_db,frames,frame_errors,bit_errors,fer,ber"
    assert len(csv) == 4


def test_zero_budget_is_empty(small):
    spec, p = small
    assert montecarlo(spec, p, None, [1.0, 2.0], StopRule(10, 0)).points == ()


def test_wrong_program(small):
    spec, p = small
    with pytest.raises(InvalidParameters):
        montecarlo(construct_5g(128, 60), p, None, [1.0])


def test_determinism_and_worker_independence(small):
    spec, p = small
    stop = StopRule(40, 4000)
    a = montecarlo(spec, p, QuantSpec(), [1.0, 2.0], stop, seed=11, workers=1, batch_size=400)
    b = montecarlo(spec, p, QuantSpec(), [1.0, 2.0], stop, seed=11, workers=1, batch_size=400)
    c = montecarlo(spec, p, QuantSpec(), [1.0, 2.0], stop, seed=11, workers=3, batch_size=400)
    assert a == b == c
    d = montecarlo(spec, p, QuantSpec(), [1.0, 2.0], stop, seed=12, batch_size=400)
    assert d != a


def test_max_frames_truncates_last_batch(small):
    spec, p = small
    rep = montecarlo(spec, p, None, [5.0], StopRule(10**6, 1234), batch_size=500)
    assert rep.points[0].frames == 1234


def test_ebno_at_fer():
    from fastssc.channel import SimPoint
    rep = SimReport(10, 0, (SimPoint(1.0, 1000, 100, 0), SimPoint(2.0, 1000, 1, 0)))
    assert ebno_at_fer(rep, 0.01) == pytest.approx(1.5)
    assert math.isnan(ebno_at_fer(rep, 0.5))
