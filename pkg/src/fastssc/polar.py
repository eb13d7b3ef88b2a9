"""Polar code specification, 5G construction, encoder and node classification.

Bit order is natural throughout: ``u[0]`` is the first bit decoded by SC and
``x[0]`` is the first codeword bit.  The encoder is the butterfly recursion
``x = u F^{(x)n}`` over GF(2) with kernel ``F = [[1, 0], [1, 1]]``.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from functools import cached_property, lru_cache
from importlib import resources
from pathlib import Path

import numpy as np


class InvalidParameters(ValueError):
    """Raised when arguments violate a documented precondition."""


class UnsupportedLength(InvalidParameters):
    """Raised when the bundled reliability sequence does not cover N."""


@lru_cache(maxsize=1)
def reliability_sequence() -> np.ndarray:
    """Return the bundled 5G reliability sequence (least reliable first).

    Returns
    -------
    ndarray of int
        A permutation of ``0..1023`` ordered by increasing reliability.
    """
    text = resources.files("fastssc").joinpath("data/reliability_5g.txt").read_text()
    seq = np.array([int(tok) for tok in text.split()], dtype=np.int64)
    seq.setflags(write=False)
    return seq


def _is_pow2(x: int) -> bool:
    return x >= 1 and (x & (x - 1)) == 0


@dataclass(frozen=True)
class CodeSpec:
    """A polar code PC(N, K) with an explicit frozen set.

    Parameters
    ----------
    N : int
        Block length, a power of two.
    K : int
        Number of information bits, ``0 < K <= N``.
    frozen : tuple of int
        Sorted frozen indices, ``len(frozen) == N - K``.
    """

    N: int
    K: int
    frozen: tuple[int, ...]

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or not _is_pow2(int(self.N)):
            raise InvalidParameters(f"N must be a power of two, got {self.N}")
        if not 0 < self.K <= self.N:
            raise InvalidParameters(f"need 0 < K <= N, got K={self.K}, N={self.N}")
        fz = tuple(sorted(int(i) for i in self.frozen))
        if len(set(fz)) != len(fz) or any(i < 0 or i >= self.N for i in fz):
            raise InvalidParameters("frozen indices must be unique and within [0, N)")
        if len(fz) != self.N - self.K:
            raise InvalidParameters(
                f"frozen set has {len(fz)} entries, expected N-K={self.N - self.K}")
        object.__setattr__(self, "frozen", fz)
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "K", int(self.K))

    @property
    def n(self) -> int:
        """Tree depth, ``N = 2**n``."""
        return self.N.bit_length() - 1

    @property
    def rate(self) -> float:
        return self.K / self.N

    @cached_property
    def frozen_mask(self) -> np.ndarray:
        """Boolean mask of length N, True at frozen positions."""
        mask = np.zeros(self.N, dtype=bool)
        mask[list(self.frozen)] = True
        mask.setflags(write=False)
        return mask

    @cached_property
    def info_indices(self) -> np.ndarray:
        idx = np.flatnonzero(~self.frozen_mask)
        idx.setflags(write=False)
        return idx

    def to_json(self) -> str:
        return json.dumps({"N": self.N, "K": self.K, "frozen": list(self.frozen)})

    @classmethod
    def from_json(cls, text: str) -> "CodeSpec":
        try:
            obj = json.loads(text)
            return cls(int(obj["N"]), int(obj["K"]), tuple(int(i) for i in obj["frozen"]))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidParameters):
                raise
            raise InvalidParameters(f"malformed frozen-set JSON: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> "CodeSpec":
        return cls.from_json(Path(path).read_text())


class NodeKind(enum.Enum):
    RATE0 = "Rate0"
    RATE1 = "Rate1"
    REP = "Rep"
    SPC = "Spc"
    ML = "Ml"
    RATER = "RateR"


@dataclass(frozen=True, order=True)
class NodeRef:
    """A node of the decoding tree: ``stage`` levels above the leaves."""

    stage: int
    index: int

    @property
    def size(self) -> int:
        return 1 << self.stage

    @property
    def span(self) -> tuple[int, int]:
        return self.index * self.size, (self.index + 1) * self.size

    @property
    def left(self) -> "NodeRef":
        return NodeRef(self.stage - 1, 2 * self.index)

    @property
    def right(self) -> "NodeRef":
        return NodeRef(self.stage - 1, 2 * self.index + 1)

    @property
    def parent(self) -> "NodeRef":
        return NodeRef(self.stage + 1, self.index // 2)

    @property
    def is_left(self) -> bool:
        return self.index % 2 == 0


def construct_5g(N: int, K: int) -> CodeSpec:
    """Build PC(N, K) by freezing the N-K least reliable 5G positions below N."""
    if not _is_pow2(N):
        raise InvalidParameters(f"N must be a power of two, got {N}")
    if not 0 < K <= N:
        raise InvalidParameters(f"need 0 < K <= N, got K={K}, N={N}")
    seq = reliability_sequence()
    if N > len(seq):
        raise UnsupportedLength(f"bundled sequence covers N <= {len(seq)}, got {N}")
    restricted = seq[seq < N]
    return CodeSpec(N, K, tuple(int(i) for i in restricted[: N - K]))


def polar_transform(u: np.ndarray) -> np.ndarray:
    """Apply the GF(2) butterfly transform along the last axis.

    The transform is its own inverse.
    """
    x = np.array(u, dtype=np.uint8, copy=True)
    N = x.shape[-1]
    if not _is_pow2(N):
        raise InvalidParameters(f"length must be a power of two, got {N}")
    lead = x.shape[:-1]
    half = 1
    while half < N:
        v = x.reshape(*lead, N // (2 * half), 2, half)
        v[..., 0, :] ^= v[..., 1, :]
        half *= 2
    return x


def encode(spec: CodeSpec, info_bits) -> np.ndarray:
    """Encode K information bits (or a batch of shape ``(B, K)``).

    Returns
    -------
    ndarray of uint8
        Codeword(s) of length N.
    """
    info = np.asarray(info_bits, dtype=np.uint8)
    if info.shape[-1:] != (spec.K,):
        raise InvalidParameters(f"expected {spec.K} info bits, got shape {info.shape}")
    u = np.zeros(info.shape[:-1] + (spec.N,), dtype=np.uint8)
    u[..., spec.info_indices] = info
    return polar_transform(u)


def leaf_pattern(spec: CodeSpec, node: NodeRef) -> str:
    """Return the F/I pattern of the node's leaves, e.g. ``"FFFI"``."""
    lo, hi = node.span
    return "".join("F" if f else "I" for f in spec.frozen_mask[lo:hi])


def classify_pattern(pattern: str) -> NodeKind:
    """Classify a leaf pattern; see :func:`classify`."""
    n_info = pattern.count("I")
    size = len(pattern)
    if n_info == 0:
        return NodeKind.RATE0
    if n_info == size:
        return NodeKind.RATE1
    if n_info == 1 and pattern[-1] == "I":
        return NodeKind.REP
    if size >= 2 and n_info == size - 1 and pattern[0] == "F":
        return NodeKind.SPC
    if pattern == "FFII":
        return NodeKind.ML
    return NodeKind.RATER


def classify(spec: CodeSpec, node: NodeRef) -> NodeKind:
    """Classify a node by its frozen/info leaf pattern.

    Precedence is Rate0, Rate1, Rep, Spc, Ml, RateR, so ``"FI"`` is a Rep.
    """
    if not (0 <= node.stage <= spec.n and 0 <= node.index < spec.N >> node.stage):
        raise InvalidParameters(f"{node} is not a node of a length-{spec.N} code")
    return classify_pattern(leaf_pattern(spec, node))
