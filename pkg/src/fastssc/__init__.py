"""Polar-code Fast-SSC decoding: construction, reference SC decoder, special-node
kernels, an instruction compiler with operation merging, latency and memory
models, a fixed-point decoder VM and a Monte-Carlo channel harness."""

from .channel import SimReport, StopRule, awgn_llrs, montecarlo
from .compiler import (Instruction, NodeLimits, Opcode, Program, analyze_potentials,
                       apply_merge_passes, compile_baseline, compile_program, program_stats)
from .perf import (MemoryLayout, cycles_of, latency, theta_sp, utilization, words_baseline,
                   words_proposed)
from .polar import (CodeSpec, InvalidParameters, NodeKind, NodeRef, UnsupportedLength,
                    classify, construct_5g, encode, polar_transform)
from .sc import combine, f_minsum, g, hard_decision_leaf, sc_decode
from .vm import DecoderState, QuantSpec, decode, execute, quantize_channel, trace

__version__ = "0.1.0"
