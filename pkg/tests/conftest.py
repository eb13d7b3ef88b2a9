import numpy as np
import pytest
from hypothesis import strategies as st

from fastssc.polar import CodeSpec


def spec_from_pattern(pattern: str) -> CodeSpec:
    """Code whose leaf pattern is ``pattern`` (F = frozen, I = info)."""
    frozen = tuple(i for i, c in enumerate(pattern) if c == "F")
    return CodeSpec(len(pattern), len(pattern) - len(frozen), frozen)


@st.composite
def random_specs(draw, max_n: int = 6, min_n: int = 1):
    n = draw(st.integers(min_n, max_n))
    N = 1 << n
    mask = draw(st.lists(st.booleans(), min_size=N, max_size=N))
    if all(mask):
        mask[-1] = False
    return CodeSpec(N, N - sum(mask), tuple(i for i, m in enumerate(mask) if m))


def noisy_frames(spec, rng, frames, ebno_db=2.0):
    from fastssc.channel import awgn_llrs
    from fastssc.polar import encode

    info = rng.integers(0, 2, size=(frames, spec.K), dtype=np.uint8)
    x = encode(spec, info)
    return info, x, awgn_llrs(x, ebno_db, spec.rate, rng)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
