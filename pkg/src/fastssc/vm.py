"""Instruction-driven decoder executing a compiled Program on a memory model.

LLRs live in an alpha memory laid out by :class:`~fastssc.perf.MemoryLayout`,
hard decisions in a two-bank beta memory (left children in bank 0, right
children in bank 1).  In quantized mode every LLR is an integer number of
``2**-qf`` steps; in real mode (``quant=None``) values are float64 and the VM
must agree bit-exactly with :func:`fastssc.sc.sc_decode`.

The VM processes a batch of independent frames at once: every memory carries
a leading frame axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels as K
from .compiler import Instruction, Opcode, Program
from .perf import MemoryLayout
from .polar import InvalidParameters, NodeRef, polar_transform
from .sc import combine


@dataclass(frozen=True)
class QuantSpec:
    """Fixed-point format Q(qi, qc, qf): internal bits, channel bits, fraction bits."""

    qi: int = 6
    qc: int = 5
    qf: int = 1

    def __post_init__(self):
        if not (self.qi >= self.qc >= self.qf + 1 and self.qf >= 0):
            raise InvalidParameters(f"need qi >= qc >= qf+1, got {self}")

    @property
    def internal_limit(self) -> int:
        return (1 << (self.qi - 1)) - 1

    @property
    def channel_limit(self) -> int:
        return (1 << (self.qc - 1)) - 1

    @property
    def step(self) -> float:
        return 2.0 ** -self.qf

    @classmethod
    def parse(cls, text: str) -> "QuantSpec":
        try:
            qi, qc, qf = (int(t) for t in text.split(","))
        except ValueError as exc:
            raise InvalidParameters(f"quantization must look like 6,5,1, got {text!r}") from exc
        return cls(qi, qc, qf)


def channel_steps(y, quant: QuantSpec) -> np.ndarray:
    """Quantize real LLRs to integer steps (round half away from zero, saturate)."""
    y = np.asarray(y, dtype=np.float64)
    scaled = np.abs(y) * (1 << quant.qf)
    q = np.sign(y) * np.floor(scaled + 0.5)
    lim = quant.channel_limit
    return np.clip(q, -lim, lim).astype(np.int32)


def quantize_channel(y, quant: QuantSpec = QuantSpec()):
    """Quantized channel LLRs as real values (multiples of ``2**-qf``)."""
    return channel_steps(y, quant) * quant.step


@dataclass
class DecoderState:
    """Memories of the decoder for a batch of frames."""

    alpha_mem: np.ndarray
    beta_mem: np.ndarray
    codeword_mem: np.ndarray
    channel_mem: np.ndarray
    layout: MemoryLayout
    quant: QuantSpec | None
    N: int
    pe: int
    log: list | None = field(default=None, repr=False)

    @classmethod
    def load(cls, p: Program, llrs, quant: QuantSpec | None = QuantSpec(),
             packed: bool | None = None) -> "DecoderState":
        """Allocate memories for ``p`` and load channel LLRs (shape (N,) or (B, N))."""
        llrs = np.atleast_2d(np.asarray(llrs, dtype=np.float64))
        N = p.spec.N
        if llrs.shape[-1] != N:
            raise InvalidParameters(f"expected {N} LLRs per frame, got {llrs.shape[-1]}")
        if not np.all(np.isfinite(llrs)):
            raise InvalidParameters("channel LLRs must be finite")
        if packed is None:
            packed = p.merged
        layout = MemoryLayout.build(N, p.pe, packed=packed, min_stage=0)
        B = llrs.shape[0]
        if quant is None:
            channel = llrs.copy()
            dtype = np.float64
        else:
            channel = channel_steps(llrs, quant)
            dtype = np.int32
        entries = max(layout.entries, 1)
        return cls(alpha_mem=np.zeros((B, entries), dtype=dtype),
                   beta_mem=np.zeros((2, B, entries), dtype=np.uint8),
                   codeword_mem=np.zeros((B, N), dtype=np.uint8),
                   channel_mem=channel, layout=layout, quant=quant, N=N, pe=p.pe)

    @property
    def n(self) -> int:
        return self.N.bit_length() - 1

    def _region(self, stage: int) -> slice:
        start = self.layout.address(stage)
        return slice(start, start + (1 << stage))

    def read_alpha(self, node: NodeRef) -> np.ndarray:
        if node.stage == self.n:
            return self.channel_mem
        return self.alpha_mem[:, self._region(node.stage)]

    def write_alpha(self, node: NodeRef, values: np.ndarray) -> None:
        self.alpha_mem[:, self._region(node.stage)] = values
        if self.log is not None:
            self.log.append(("alpha", node, values))

    def read_beta(self, node: NodeRef) -> np.ndarray:
        if node.stage == self.n:
            return self.codeword_mem
        return self.beta_mem[node.index & 1, :, self._region(node.stage)]

    def write_beta(self, node: NodeRef, values: np.ndarray) -> None:
        if node.stage == self.n:
            self.codeword_mem[:] = values
        else:
            self.beta_mem[node.index & 1, :, self._region(node.stage)] = values
        if self.log is not None:
            self.log.append(("beta", node, values))


class _Executor:
    def __init__(self, state: DecoderState, check_range: bool):
        self.st = state
        self.arith = K.REAL if state.quant is None else K.saturating(state.quant.qi)
        self.check_range = check_range and state.quant is not None

    def _store_alpha(self, node: NodeRef, values) -> None:
        if self.check_range:
            lim = self.st.quant.internal_limit
            if np.any(np.abs(values) > lim):
                raise AssertionError(f"alpha out of range at {node}")
        self.st.write_alpha(node, values)

    def base(self, ins: Instruction, alpha_in=None, beta_r_in=None, store: bool = True):
        """Execute one base instruction; returns the vector it produces."""
        st, ar, op, v = self.st, self.arith, ins.op, ins.node
        if op in (Opcode.F, Opcode.G, Opcode.G0):
            a = st.read_alpha(v) if alpha_in is None else alpha_in
            h = a.shape[-1] // 2
            if op is Opcode.F:
                out, dest = ar.f(a[:, :h], a[:, h:]).astype(a.dtype), v.left
            elif op is Opcode.G:
                out, dest = ar.g(a[:, :h], a[:, h:], st.read_beta(v.left)), v.right
            else:
                out, dest = ar.g0(a[:, :h], a[:, h:]), v.right
            if store:
                self._store_alpha(dest, out)
            return out
        if op in (Opcode.C, Opcode.C0):
            br = st.read_beta(v.right) if beta_r_in is None else beta_r_in
            bl = st.read_beta(v.left) if op is Opcode.C else np.zeros_like(br)
            out = combine(bl, br)
        elif op in (Opcode.PR1, Opcode.PRSPC, Opcode.P01, Opcode.P0SPC):
            bl = st.read_beta(v.left) if op in (Opcode.PR1, Opcode.PRSPC) else None
            kind = "Rate1" if op in (Opcode.PR1, Opcode.P01) else "Spc"
            out = K.fused_right(st.read_alpha(v), bl, kind, ar)
        else:
            out = self.leaf(op, st.read_alpha(v))
        if store:
            st.write_beta(v, out)
        return out

    def leaf(self, op: Opcode, a):
        if op is Opcode.RATE0:
            return K.decode_rate0(a)
        if op is Opcode.RATE1:
            return K.decode_rate1(a)
        if op is Opcode.REP:
            return K.decode_rep(a)
        if op is Opcode.SPC:
            return K.decode_spc(a)
        if op is Opcode.ML:
            return K.decode_ml4(a)
        if op is Opcode.REPSPC:
            return K.decode_repspc(a, self.arith)
        if op is Opcode.REP_REPSPC:
            return K.decode_rep_repspc(a, self.arith)
        if op is Opcode.REP_RATE1:
            return K.decode_rep_rate1(a, self.arith)
        if op is Opcode.RATE0_ML:
            return K.decode_rate0_ml(a, self.arith)
        raise InvalidParameters(f"not a leaf opcode: {op}")

    def run(self, ins: Instruction) -> None:
        op, st = ins.op, self.st
        if not ins.merged:
            self.base(ins)
        elif op in (Opcode.F2, Opcode.GF):
            # Both intermediate LLR vectors are written back.
            for sub in ins.subs:
                self.base(sub)
        elif op in (Opcode.G02, Opcode.FG0):
            tmp = self.base(ins.subs[0], store=False)
            self.base(ins.subs[1], alpha_in=tmp)
        elif op in (Opcode.C2, Opcode.C3, Opcode.C02, Opcode.C03):
            tmp = None
            last = len(ins.subs) - 1
            for k, sub in enumerate(ins.subs):
                tmp = self.base(sub, beta_r_in=tmp, store=(k == last))
        elif op is Opcode.FREP:
            st.write_beta(ins.node.left, K.decode_f_rep(st.read_alpha(ins.node), self.arith))
        elif op in (Opcode.REP_REPSPC, Opcode.REP_RATE1, Opcode.RATE0_ML):
            st.write_beta(ins.node, self.leaf(op, st.read_alpha(ins.node)))
        else:
            raise InvalidParameters(f"unknown merged opcode {op}")


def _check(p: Program, state: DecoderState) -> None:
    if p.spec.N != state.N or p.pe != state.pe:
        raise InvalidParameters(
            f"program is for N={p.spec.N}, pe={p.pe}; state is N={state.N}, pe={state.pe}")


def _outputs(state: DecoderState, single: bool):
    x_hat = state.codeword_mem.copy()
    u_hat = polar_transform(x_hat)
    if single:
        return u_hat[0], x_hat[0]
    return u_hat, x_hat


def execute(p: Program, state: DecoderState, check_range: bool = False):
    """Run every instruction of ``p``; returns ``(u_hat, x_hat)`` of shape (B, N)."""
    _check(p, state)
    ex = _Executor(state, check_range)
    for ins in p.instructions:
        ex.run(ins)
    return _outputs(state, single=False)


def decode(p: Program, llrs, quant: QuantSpec | None = QuantSpec(),
           check_range: bool = False):
    """Convenience wrapper: load LLRs, execute, return ``(u_hat, x_hat)``.

    A single frame of shape (N,) yields outputs of shape (N,).
    """
    single = np.ndim(llrs) == 1
    state = DecoderState.load(p, llrs, quant)
    u_hat, x_hat = execute(p, state, check_range)
    return (u_hat[0], x_hat[0]) if single else (u_hat, x_hat)


def _values(v: np.ndarray, quant: QuantSpec | None) -> list:
    row = np.asarray(v)[0]
    if row.dtype == np.uint8:
        return [int(b) for b in row]
    if quant is None:
        return [float(x) for x in row]
    return [float(x) * quant.step for x in row]


def trace(p: Program, state: DecoderState) -> list[dict]:
    """Execute ``p`` and return one record per step for the first frame.

    Each record lists the memory writes of the step: LLR vectors (in LLR
    units) and hard-decision vectors, tagged with the node they belong to.
    """
    _check(p, state)
    ex = _Executor(state, check_range=False)
    records = []
    for step, ins in enumerate(p.instructions):
        state.log = []
        ex.run(ins)
        writes = [{"mem": kind, "stage": node.stage, "node": node.index,
                   "values": _values(vals, state.quant)} for kind, node, vals in state.log]
        records.append({"step": step, "op": ins.op.value, "stage": ins.stage,
                        "node": ins.node.index, "writes": writes})
    state.log = None
    return records
