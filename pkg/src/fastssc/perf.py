"""Latency and memory models for a semi-parallel Fast-SSC decoder with P_e PEs.

A memory word holds ``2 * pe`` LLRs.  Branch operations on nodes wider than
the datapath take several cycles; everything that fits takes one.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from .compiler import BRANCH_OPS, LEAF_OPS, PARENT_OPS, Instruction, Opcode, Program
from .polar import InvalidParameters


def cycles_of(instr: Instruction, pe: int) -> int:
    """Clock cycles for one instruction.

    * F/G/G0/C/C0 at stage S: ``max(1, 2**(S-1) / pe)``.
    * PR1/P01/PRSPC/P0SPC: one cycle when the child fits the datapath,
      otherwise a G pass followed by a combine pass, ``2 * 2**(S-1) / pe``.
    * Leaf kernels on N_v leaves: ``max(1, ceil(N_v / (2 pe)))``.
    * Merged instructions: one cycle (they are low-stage by construction).
    """
    op = instr.op
    S = instr.stage
    if instr.merged:
        return 1
    half = (1 << S) >> 1
    if op in BRANCH_OPS:
        return max(1, half // pe)
    if op in PARENT_OPS:
        return 1 if half <= pe else 2 * (half // pe)
    if op in LEAF_OPS:
        return max(1, math.ceil((1 << S) / (2 * pe)))
    raise InvalidParameters(f"unmerged instruction with merged opcode {op}")


@dataclass(frozen=True)
class LatencyReport:
    steps: int
    cycles: int
    by_opcode: dict = field(default_factory=dict)


def latency(p: Program) -> LatencyReport:
    """Steps and total cycles of a program, with a per-opcode cycle breakdown."""
    by_op: Counter = Counter()
    for ins in p.instructions:
        by_op[ins.op.value] += cycles_of(ins, p.pe)
    return LatencyReport(len(p.instructions), sum(by_op.values()), dict(sorted(by_op.items())))


@dataclass(frozen=True)
class MemoryLayout:
    """Placement of per-stage LLR vectors in ``2 * pe``-element words.

    ``regions`` maps stage to ``(word, offset, length)``; a region of a stage
    wider than one word spans consecutive words starting at ``offset`` 0.
    """

    pe: int
    words: int
    regions: dict
    packed: bool

    @property
    def word_bits(self) -> int:
        return 2 * self.pe

    @property
    def entries(self) -> int:
        return self.words * self.word_bits

    def address(self, stage: int) -> int:
        """Flat element address of the first entry of ``stage``."""
        word, offset, _ = self.regions[stage]
        return word * self.word_bits + offset

    @classmethod
    def build(cls, N: int, pe: int, packed: bool, min_stage: int = 2) -> "MemoryLayout":
        """Layout for stages ``min_stage .. n-1`` (the root lives in channel memory).

        Baseline reserves at least one word per stage.  The packed layout puts
        every stage ``S <= log2(pe)`` into one shared word, stage ``s`` at
        offset ``2 pe - 2**(s+1)``.
        """
        if pe < 1 or pe & (pe - 1) or N & (N - 1):
            raise InvalidParameters("N and pe must be powers of two")
        n = N.bit_length() - 1
        t = pe.bit_length() - 1
        regions = {}
        word = 0
        if packed and min_stage <= t < n:
            for s in range(min_stage, t + 1):
                regions[s] = (0, 2 * pe - (1 << (s + 1)), 1 << s)
            word = 1
            first = t + 1
        else:
            first = min_stage
        for s in range(first, n):
            regions[s] = (word, 0, 1 << s)
            word += max(1, -(-(1 << s) // (2 * pe)))
        return cls(pe, word, regions, packed)


def _check_domain(N: int, pe: int) -> None:
    if pe < 4 or 4 * pe > N:
        raise InvalidParameters(f"memory model needs 4 <= pe <= N/4, got N={N}, pe={pe}")


def words_baseline(N: int, pe: int) -> int:
    _check_domain(N, pe)
    return MemoryLayout.build(N, pe, packed=False).words


def words_proposed(N: int, pe: int) -> int:
    _check_domain(N, pe)
    return MemoryLayout.build(N, pe, packed=True).words


def utilization(N: int, pe: int, packed: bool) -> float:
    """Fraction of allocated LLR entries that hold stage data, as a percentage."""
    _check_domain(N, pe)
    n = N.bit_length() - 1
    used = sum(1 << s for s in range(2, n))
    words = words_proposed(N, pe) if packed else words_baseline(N, pe)
    return 100.0 * used / (words * 2 * pe)


def theta_sp(N: int, pe: int) -> float:
    """Semi-parallel PE utilization ``log2 N / (4 pe + log2(N / (4 pe)))`` in percent."""
    if 4 * pe > N:
        raise InvalidParameters(f"theta_sp needs 4 pe <= N, got N={N}, pe={pe}")
    return 100.0 * math.log2(N) / (4 * pe + math.log2(N / (4 * pe)))
