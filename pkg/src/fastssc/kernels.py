"""Closed-form special-node decoders and merged special-node kernels.

Every kernel works on the last axis and broadcasts over leading batch axes.
Kernels take an ``arith`` argument so the same code serves the real-valued
oracle path (:data:`REAL`) and the saturating fixed-point VM path
(:func:`saturating`).  Sums that only feed a sign or an argmax (Rep
accumulation, ML correlation) are never saturated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .polar import InvalidParameters
from .sc import combine, f_minsum


@dataclass(frozen=True)
class Arithmetic:
    """Message arithmetic.  ``limit`` is the symmetric saturation bound, or None."""

    limit: int | None = None

    def sat(self, x):
        if self.limit is None:
            return x
        return np.clip(x, -self.limit, self.limit)

    def f(self, a, b):
        return f_minsum(a, b)

    def g(self, a, b, beta_l):
        return self.sat(b + np.where(beta_l != 0, -a, a))

    def g0(self, a, b):
        return self.sat(b + a)


REAL = Arithmetic()


def saturating(qi: int) -> Arithmetic:
    """Fixed-point arithmetic on integer steps with ``qi`` total bits."""
    return Arithmetic(limit=(1 << (qi - 1)) - 1)


def _halves(alpha):
    h = alpha.shape[-1] // 2
    return alpha[..., :h], alpha[..., h:]


def _fold_sum(alpha):
    # Adds halves repeatedly, the same order as a chain of G0 operations, so
    # real-valued results are bit-identical to the SC tree.
    s = np.asarray(alpha)
    if np.issubdtype(s.dtype, np.integer):
        s = s.astype(np.int64)
    while s.shape[-1] > 1:
        a, b = _halves(s)
        s = b + a
    return s[..., 0]


def _check_len(alpha, allowed, name):
    n = np.shape(alpha)[-1]
    if n not in allowed:
        raise InvalidParameters(f"{name}: unsupported length {n}")


def hard_decision(alpha) -> np.ndarray:
    return (np.asarray(alpha) < 0).astype(np.uint8)


def decode_rate0(alpha) -> np.ndarray:
    return np.zeros(np.shape(alpha), dtype=np.uint8)


def decode_rate1(alpha) -> np.ndarray:
    return hard_decision(alpha)


def decode_rep(alpha) -> np.ndarray:
    """Repetition node: all zeros if the LLR sum is >= 0, otherwise all ones."""
    alpha = np.asarray(alpha)
    n = alpha.shape[-1]
    if n < 2 or n & (n - 1):
        raise InvalidParameters(f"decode_rep needs a power-of-two length >= 2, got {n}")
    bit = (_fold_sum(alpha) < 0).astype(np.uint8)
    return np.broadcast_to(bit[..., None], alpha.shape).copy()


def decode_spc(alpha) -> np.ndarray:
    """Single parity check node (Wagner decoding).

    Hard-decide every bit; if the parity is odd, flip the least reliable bit
    (lowest index on ties).
    """
    alpha = np.asarray(alpha)
    if alpha.shape[-1] < 2:
        raise InvalidParameters("decode_spc needs at least 2 LLRs")
    hd = hard_decision(alpha)
    parity = np.bitwise_xor.reduce(hd, axis=-1)
    j = np.argmin(np.abs(alpha), axis=-1)
    np.put_along_axis(hd, j[..., None],
                      np.take_along_axis(hd, j[..., None], axis=-1) ^ parity[..., None],
                      axis=-1)
    return hd


ML4_CANDIDATES = np.array([[0, 0, 0, 0], [1, 0, 1, 0], [1, 1, 1, 1], [0, 1, 0, 1]],
                          dtype=np.uint8)


def decode_ml4(alpha) -> np.ndarray:
    """Exhaustive ML over the four codewords of the FFII pattern.

    Ties go to the earliest candidate in :data:`ML4_CANDIDATES`.
    """
    alpha = np.asarray(alpha)
    _check_len(alpha, (4,), "decode_ml4")
    if np.issubdtype(alpha.dtype, np.integer):
        alpha = alpha.astype(np.int64)
    # Candidates are (a, b, a, b); correlation is +/-(a0+a2) +/-(a1+a3).
    s02 = alpha[..., 2] + alpha[..., 0]
    s13 = alpha[..., 3] + alpha[..., 1]
    corr = np.stack([s02 + s13, -s02 + s13, -s02 - s13, s02 - s13], axis=-1)
    return ML4_CANDIDATES[np.argmax(corr, axis=-1)]


def decode_repspc(alpha, arith: Arithmetic = REAL) -> np.ndarray:
    """RepSPC node (FFFIFIII, size 8): Rep(4) left child, SPC(4) right child."""
    alpha = np.asarray(alpha)
    _check_len(alpha, (8,), "decode_repspc")
    a, b = _halves(alpha)
    bl = decode_rep(arith.f(a, b))
    br = decode_spc(arith.g(a, b, bl))
    return combine(bl, br)


def decode_rep_repspc(alpha, arith: Arithmetic = REAL) -> np.ndarray:
    """Size-16 node with a Rep(8) left child and a RepSPC(8) right child."""
    alpha = np.asarray(alpha)
    _check_len(alpha, (16,), "decode_rep_repspc")
    a, b = _halves(alpha)
    bl = decode_rep(arith.f(a, b))
    br = decode_repspc(arith.g(a, b, bl), arith)
    return combine(bl, br)


def decode_rep_rate1(alpha, arith: Arithmetic = REAL) -> np.ndarray:
    """Node with a Rep left child and a Rate-1 right child."""
    alpha = np.asarray(alpha)
    if alpha.shape[-1] < 4:
        raise InvalidParameters("decode_rep_rate1 needs at least 4 LLRs")
    a, b = _halves(alpha)
    bl = decode_rep(arith.f(a, b))
    br = hard_decision(arith.g(a, b, bl))
    return combine(bl, br)


def decode_rate0_ml(alpha, arith: Arithmetic = REAL) -> np.ndarray:
    """Size-8 node with a Rate-0 left child and an ML (FFII) right child."""
    alpha = np.asarray(alpha)
    _check_len(alpha, (8,), "decode_rate0_ml")
    a, b = _halves(alpha)
    br = decode_ml4(arith.g0(a, b))
    return combine(np.zeros_like(br), br)


def decode_f_rep(alpha, arith: Arithmetic = REAL) -> np.ndarray:
    """Hard decisions of the Rep left child only; the parent continues with G."""
    alpha = np.asarray(alpha)
    if alpha.shape[-1] < 4:
        raise InvalidParameters("decode_f_rep needs at least 4 LLRs")
    a, b = _halves(alpha)
    return decode_rep(arith.f(a, b))


def fused_right(alpha, beta_l, right_kind: str, arith: Arithmetic = REAL) -> np.ndarray:
    """G, right-child kernel and combine in one step.

    Parameters
    ----------
    alpha : array_like
        Parent LLRs.
    beta_l : array_like or None
        Left-child decisions, or None when the left child is Rate-0.
    right_kind : {"Rate1", "Spc"}
    """
    alpha = np.asarray(alpha)
    a, b = _halves(alpha)
    if beta_l is None:
        ar = arith.g0(a, b)
    else:
        ar = arith.g(a, b, np.asarray(beta_l))
    if right_kind == "Rate1":
        br = hard_decision(ar)
    elif right_kind == "Spc":
        br = decode_spc(ar)
    else:
        raise InvalidParameters(f"unsupported right child kind {right_kind!r}")
    bl = np.zeros_like(br) if beta_l is None else np.asarray(beta_l, dtype=np.uint8)
    return combine(bl, br)
