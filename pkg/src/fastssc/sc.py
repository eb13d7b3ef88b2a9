"""Real-valued min-sum successive-cancellation decoder.

This is the golden reference the Fast-SSC kernels and the instruction VM are
checked against.  All functions broadcast over leading batch axes.
"""

from __future__ import annotations

import numpy as np

from .polar import CodeSpec, InvalidParameters, NodeRef


def f_minsum(a, b):
    """Left-child message: ``sgn(a) sgn(b) min(|a|, |b|)`` with ``sgn(0) = +1``."""
    a = np.asarray(a)
    b = np.asarray(b)
    sign = np.where((a < 0) ^ (b < 0), -1, 1)
    return sign * np.minimum(np.abs(a), np.abs(b))


def g(a, b, beta_l):
    """Right-child message: ``b + (1 - 2 beta_l) a``."""
    a = np.asarray(a)
    return np.asarray(b) + np.where(np.asarray(beta_l) != 0, -a, a)


def combine(beta_l, beta_r) -> np.ndarray:
    """Parent hard decisions ``(beta_l XOR beta_r, beta_r)``."""
    bl = np.asarray(beta_l, dtype=np.uint8)
    br = np.asarray(beta_r, dtype=np.uint8)
    if bl.shape != br.shape:
        raise InvalidParameters(f"length mismatch: {bl.shape} vs {br.shape}")
    return np.concatenate([bl ^ br, br], axis=-1)


def hard_decision_leaf(alpha, index: int, spec: CodeSpec):
    """Leaf decision: 0 if ``alpha >= 0`` or the index is frozen, else 1."""
    alpha = np.asarray(alpha)
    if spec.frozen_mask[index]:
        return np.zeros(alpha.shape, dtype=np.uint8)
    return (alpha < 0).astype(np.uint8)


def sc_decode(spec: CodeSpec, llrs, log: list | None = None):
    """Decode channel LLRs with min-sum SC.

    Parameters
    ----------
    spec : CodeSpec
    llrs : array_like
        Shape ``(N,)`` or ``(B, N)``.
    log : list, optional
        If given, one text line per tree operation is appended to it.

    Returns
    -------
    u_hat, x_hat : ndarray of uint8
        Leaf decisions and the root hard decisions, same shape as ``llrs``.
    """
    alpha = np.asarray(llrs, dtype=np.float64)
    if alpha.shape[-1] != spec.N:
        raise InvalidParameters(f"expected {spec.N} LLRs, got shape {alpha.shape}")
    u_hat = np.zeros(alpha.shape, dtype=np.uint8)

    def rec(a: np.ndarray, node: NodeRef) -> np.ndarray:
        if node.stage == 0:
            bit = hard_decision_leaf(a[..., 0], node.index, spec)
            u_hat[..., node.index] = bit
            if log is not None:
                log.append(f"leaf u{node.index} alpha={_fmt(a[..., 0])} -> {_fmt(bit)}")
            return bit[..., None]
        h = node.size // 2
        al = f_minsum(a[..., :h], a[..., h:])
        if log is not None:
            log.append(f"f  stage={node.stage} node={node.index} -> {_fmt(al)}")
        bl = rec(al, node.left)
        ar = g(a[..., :h], a[..., h:], bl)
        if log is not None:
            log.append(f"g  stage={node.stage} node={node.index} -> {_fmt(ar)}")
        br = rec(ar, node.right)
        out = combine(bl, br)
        if log is not None:
            log.append(f"c  stage={node.stage} node={node.index} -> {_fmt(out)}")
        return out

    x_hat = rec(alpha, NodeRef(spec.n, 0))
    return u_hat, x_hat


def _fmt(v) -> str:
    arr = np.asarray(v)
    if arr.ndim > 1:
        arr = arr[0]
    return np.array2string(arr, separator=",", max_line_width=10**6)


def sc_trace(spec: CodeSpec, llrs) -> list[str]:
    """Step-by-step text dump of a single-frame SC decode."""
    lines: list[str] = []
    sc_decode(spec, llrs, log=lines)
    return lines
