"""Fast-SSC instruction compiler, merging passes and merge-potential analysis.

A baseline program is emitted by walking the pruned decoding tree left first.
:func:`apply_merge_passes` then fuses short dependent runs of low-stage
instructions into single-step instructions.  :func:`analyze_potentials`
measures how many steps one merge scenario alone would save.
"""

from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .polar import CodeSpec, InvalidParameters, NodeKind, NodeRef, classify_pattern, leaf_pattern


class Opcode(str, enum.Enum):
    F = "F"
    G = "G"
    G0 = "G0"
    C = "C"
    C0 = "C0"
    PR1 = "PR1"
    P01 = "P01"
    PRSPC = "PRSPC"
    P0SPC = "P0SPC"
    ML = "ML"
    REP = "REP"
    REPSPC = "REPSPC"
    RATE0 = "RATE0"
    RATE1 = "RATE1"
    SPC = "SPC"
    F2 = "F2"
    G02 = "G02"
    C2 = "C2"
    C3 = "C3"
    C02 = "C02"
    C03 = "C03"
    GF = "GF"
    FG0 = "FG0"
    FREP = "FREP"
    REP_REPSPC = "REP_REPSPC"
    REP_RATE1 = "REP_RATE1"
    RATE0_ML = "RATE0_ML"


BRANCH_OPS = frozenset({Opcode.F, Opcode.G, Opcode.G0, Opcode.C, Opcode.C0})
PARENT_OPS = frozenset({Opcode.PR1, Opcode.P01, Opcode.PRSPC, Opcode.P0SPC})
LEAF_OPS = frozenset({Opcode.ML, Opcode.REP, Opcode.REPSPC, Opcode.RATE0,
                      Opcode.RATE1, Opcode.SPC})
BASE_OPS = BRANCH_OPS | PARENT_OPS | LEAF_OPS
MERGED_OPS = frozenset(Opcode) - BASE_OPS


@dataclass(frozen=True)
class Instruction:
    """One program step.

    ``node`` is the governing node; for merged instructions it is the node of
    the first constituent and ``subs`` lists every constituent base
    instruction in execution order.
    """

    op: Opcode
    node: NodeRef
    subs: tuple["Instruction", ...] = ()

    @property
    def stage(self) -> int:
        return self.node.stage

    @property
    def merged(self) -> bool:
        return bool(self.subs)


@dataclass(frozen=True)
class NodeLimits:
    """Largest node sizes recognized as special leaf nodes (None = unbounded)."""

    rep: int | None = 16
    spc: int | None = None
    rate1: int | None = None
    ml: bool = True
    repspc: bool = True


@dataclass(frozen=True)
class Program:
    instructions: tuple[Instruction, ...]
    spec: CodeSpec
    pe: int
    merged: bool = False
    limits: NodeLimits = field(default_factory=NodeLimits)

    def __len__(self) -> int:
        return len(self.instructions)

    def __iter__(self):
        return iter(self.instructions)


def _check_pe(pe: int) -> None:
    if not isinstance(pe, int) or pe < 4 or pe & (pe - 1):
        raise InvalidParameters(f"pe must be a power of two >= 4, got {pe}")


def node_kind(spec: CodeSpec, node: NodeRef, limits: NodeLimits = NodeLimits()) -> str:
    """Compiler view of a node: a NodeKind name, ``"RepSpc"`` or ``"RateR"``.

    Special kinds above their size limits are demoted to ``"RateR"``.
    """
    pattern = leaf_pattern(spec, node)
    if limits.repspc and pattern == "FFFIFIII":
        return "RepSpc"
    kind = classify_pattern(pattern)
    size = len(pattern)
    if kind is NodeKind.REP and node.stage >= 1 and limits.rep is not None and size > limits.rep:
        return "RateR"
    if kind is NodeKind.SPC and limits.spc is not None and size > limits.spc:
        return "RateR"
    if kind is NodeKind.RATE1 and node.stage >= 1 and limits.rate1 is not None \
            and size > limits.rate1:
        return "RateR"
    if kind is NodeKind.ML and not limits.ml:
        return "RateR"
    return kind.value


_LEAF_OP = {"Rate0": Opcode.RATE0, "Rate1": Opcode.RATE1, "Rep": Opcode.REP,
            "Spc": Opcode.SPC, "Ml": Opcode.ML, "RepSpc": Opcode.REPSPC}


def compile_baseline(spec: CodeSpec, pe: int, limits: NodeLimits = NodeLimits()) -> Program:
    """Emit the baseline Fast-SSC program for ``spec``.

    Special nodes become single leaf instructions.  A parent whose left child
    is Rate-0 uses G0/C0, and a right Rate-1 or SPC child is folded into a
    PR1/P01/PRSPC/P0SPC parent instruction.
    """
    _check_pe(pe)
    out: list[Instruction] = []

    def kind(node: NodeRef) -> str:
        return node_kind(spec, node, limits)

    def emit(op: Opcode, node: NodeRef) -> None:
        out.append(Instruction(op, node))

    def rec(node: NodeRef) -> None:
        k = kind(node)
        if k in _LEAF_OP:
            emit(_LEAF_OP[k], node)
            return
        kl, kr = kind(node.left), kind(node.right)
        if kl == "Rate0":
            if kr == "Rate1":
                emit(Opcode.P01, node)
            elif kr == "Spc":
                emit(Opcode.P0SPC, node)
            else:
                emit(Opcode.G0, node)
                rec(node.right)
                emit(Opcode.C0, node)
            return
        emit(Opcode.F, node)
        rec(node.left)
        if kr == "Rate1":
            emit(Opcode.PR1, node)
        elif kr == "Spc":
            emit(Opcode.PRSPC, node)
        else:
            emit(Opcode.G, node)
            rec(node.right)
            emit(Opcode.C, node)

    rec(NodeRef(spec.n, 0))
    return Program(tuple(out), spec, pe, False, limits)


# ---------------------------------------------------------------------------
# Legality.  F and G0 produce one half-width vector that must fit in the
# P_e-wide datapath, so their node is at most P_e.  G, C and C0 consume or
# produce vectors a full word (2 P_e) wide.

_WIDTH = {Opcode.F: 1, Opcode.G0: 1, Opcode.G: 2, Opcode.C: 2, Opcode.C0: 2}


def is_low_stage(op: Opcode, node: NodeRef, pe: int) -> bool:
    """True if a base branch op on ``node`` completes in a single step."""
    return node.size <= _WIDTH.get(op, 2) * pe


def _all_low(instrs: Iterable[Instruction], pe: int) -> bool:
    return all(is_low_stage(i.op, i.node, pe) for i in instrs)


# Dependency relations between consecutive base instructions.
def _next_f(a: Instruction, b: Instruction) -> bool:
    return b.node == a.node.left


def _next_g0(a: Instruction, b: Instruction) -> bool:
    return b.node == a.node.right


def _next_c(a: Instruction, b: Instruction) -> bool:
    return not a.node.is_left and b.node == a.node.parent


_CHAIN = {Opcode.F: _next_f, Opcode.G0: _next_g0, Opcode.C: _next_c, Opcode.C0: _next_c}


# Special-node patterns: (name, [(op, relation to governing node)], stage test).
_SELF, _LEFT, _RIGHT = "self", "left", "right"
_SPECIAL = {
    Opcode.REP_REPSPC: ([(Opcode.F, _SELF), (Opcode.REP, _LEFT), (Opcode.G, _SELF),
                         (Opcode.REPSPC, _RIGHT), (Opcode.C, _SELF)], lambda s: s == 4),
    Opcode.REP_RATE1: ([(Opcode.F, _SELF), (Opcode.REP, _LEFT), (Opcode.PR1, _SELF)],
                       lambda s: s >= 2),
    Opcode.RATE0_ML: ([(Opcode.G0, _SELF), (Opcode.ML, _RIGHT), (Opcode.C0, _SELF)],
                      lambda s: s == 3),
    Opcode.FREP: ([(Opcode.F, _SELF), (Opcode.REP, _LEFT)], lambda s: s >= 2),
}

# Patterns that are only analyzed, never emitted.
_ANALYSIS_ONLY = {
    "RATE0_REPSPC": ([(Opcode.G0, _SELF), (Opcode.REPSPC, _RIGHT), (Opcode.C0, _SELF)],
                     lambda s: s == 4),
    "REPSPC_RATE1": ([(Opcode.F, _SELF), (Opcode.REPSPC, _LEFT), (Opcode.PR1, _SELF)],
                     lambda s: s == 4),
    "ML_RATE1": ([(Opcode.F, _SELF), (Opcode.ML, _LEFT), (Opcode.PR1, _SELF)],
                 lambda s: s == 3),
}


def _rel(node: NodeRef, rel: str) -> NodeRef:
    return node if rel == _SELF else (node.left if rel == _LEFT else node.right)


def _match_special(instrs: Sequence[Instruction], i: int, pattern, stage_ok, pe: int) -> bool:
    if i + len(pattern) > len(instrs):
        return False
    v = instrs[i].node
    if not stage_ok(v.stage) or v.size > 2 * pe:
        return False
    for j, (op, rel) in enumerate(pattern):
        ins = instrs[i + j]
        if ins.merged or ins.op is not op or ins.node != _rel(v, rel):
            return False
        if op in BRANCH_OPS and not is_low_stage(op, ins.node, pe):
            return False
    return True


def _special_pass(instrs: list[Instruction], pe: int) -> list[Instruction]:
    for name, (pattern, stage_ok) in _SPECIAL.items():
        out: list[Instruction] = []
        i = 0
        while i < len(instrs):
            if _match_special(instrs, i, pattern, stage_ok, pe):
                group = tuple(instrs[i:i + len(pattern)])
                out.append(Instruction(name, group[0].node, group))
                i += len(pattern)
            else:
                out.append(instrs[i])
                i += 1
        instrs = out
    return instrs


def _pair_ok(a: Instruction, b: Instruction, op_a: Opcode, op_b: Opcode,
             rel: Callable[[Instruction, Instruction], bool], pe: int) -> bool:
    return (not a.merged and not b.merged and a.op is op_a and b.op is op_b
            and rel(a, b) and _all_low((a, b), pe))


def _cross_pass(instrs: list[Instruction], pe: int) -> list[Instruction]:
    rules = [(Opcode.GF, Opcode.G, Opcode.F, lambda a, b: b.node == a.node.right),
             (Opcode.FG0, Opcode.F, Opcode.G0, lambda a, b: b.node == a.node.left)]
    for name, op_a, op_b, rel in rules:
        out: list[Instruction] = []
        i = 0
        while i < len(instrs):
            if i + 1 < len(instrs) and _pair_ok(instrs[i], instrs[i + 1], op_a, op_b, rel, pe):
                out.append(Instruction(name, instrs[i].node, (instrs[i], instrs[i + 1])))
                i += 2
            else:
                out.append(instrs[i])
                i += 1
        instrs = out
    return instrs


def _runs(instrs: Sequence[Instruction], op: Opcode, pe: int) -> list[tuple[int, int]]:
    """Maximal dependency-contiguous runs of legal, unmerged ``op`` instructions."""
    runs = []
    i = 0
    ok = lambda ins: not ins.merged and ins.op is op and is_low_stage(op, ins.node, pe)
    while i < len(instrs):
        if not ok(instrs[i]):
            i += 1
            continue
        j = i + 1
        while j < len(instrs) and ok(instrs[j]) and _CHAIN[op](instrs[j - 1], instrs[j]):
            j += 1
        runs.append((i, j))
        i = j
    return runs


_SAME_KIND = [
    (Opcode.F, 2, True, {2: Opcode.F2}),
    (Opcode.G0, 2, True, {2: Opcode.G02}),
    (Opcode.C, 3, False, {2: Opcode.C2, 3: Opcode.C3}),
    (Opcode.C0, 3, False, {2: Opcode.C02, 3: Opcode.C03}),
]


def _same_kind_pass(instrs: list[Instruction], pe: int) -> list[Instruction]:
    for op, width, from_tail, names in _SAME_KIND:
        out: list[Instruction] = []
        prev = 0
        for lo, hi in _runs(instrs, op, pe):
            out.extend(instrs[prev:lo])
            run = instrs[lo:hi]
            cuts = []
            if from_tail:
                k = len(run)
                while k > 0:
                    cuts.insert(0, (max(0, k - width), k))
                    k -= width
            else:
                cuts = [(k, min(k + width, len(run))) for k in range(0, len(run), width)]
            for a, b in cuts:
                chunk = tuple(run[a:b])
                if len(chunk) == 1:
                    out.append(chunk[0])
                else:
                    out.append(Instruction(names[len(chunk)], chunk[0].node, chunk))
            prev = hi
        out.extend(instrs[prev:])
        instrs = out
    return instrs


def apply_merge_passes(p: Program) -> Program:
    """Fuse instructions: special nodes, then cross-kind pairs, then same-kind runs.

    Each pass is a single left-to-right scan over the output of the previous
    one.
    """
    if p.merged:
        raise InvalidParameters("program is already merged")
    instrs = list(p.instructions)
    instrs = _special_pass(instrs, p.pe)
    instrs = _cross_pass(instrs, p.pe)
    instrs = _same_kind_pass(instrs, p.pe)
    return Program(tuple(instrs), p.spec, p.pe, True, p.limits)


def compile_program(spec: CodeSpec, pe: int, merge: bool = True,
                    limits: NodeLimits = NodeLimits()) -> Program:
    p = compile_baseline(spec, pe, limits)
    return apply_merge_passes(p) if merge else p


# ---------------------------------------------------------------------------
# Merge-potential analysis.

SAME_KIND_SCENARIOS = {
    f"{op.value}x{k}": (op, k)
    for op in (Opcode.F, Opcode.G0, Opcode.C, Opcode.C0) for k in (2, 3, 4)
}
CROSS_SCENARIOS = {
    "G-F": (Opcode.G, Opcode.F, lambda a, b: b.node == a.node.right),
    "F-G0": (Opcode.F, Opcode.G0, lambda a, b: b.node == a.node.left),
    "C-G": (Opcode.C, Opcode.G, lambda a, b: a.node.is_left and b.node == a.node.parent),
    "C0-G": (Opcode.C0, Opcode.G, lambda a, b: a.node.is_left and b.node == a.node.parent),
}
SPECIAL_SCENARIOS = {
    "Rep-RepSPC": _SPECIAL[Opcode.REP_REPSPC],
    "Rate0-RepSPC": _ANALYSIS_ONLY["RATE0_REPSPC"],
    "RepSPC-Rate1": _ANALYSIS_ONLY["REPSPC_RATE1"],
    "Rep-Rate1": _SPECIAL[Opcode.REP_RATE1],
    "Rate0-ML": _SPECIAL[Opcode.RATE0_ML],
    "ML-Rate1": _ANALYSIS_ONLY["ML_RATE1"],
    "F-Rep": _SPECIAL[Opcode.FREP],
}
SCENARIOS = tuple(SAME_KIND_SCENARIOS) + tuple(CROSS_SCENARIOS) + tuple(SPECIAL_SCENARIOS)


def scenario_savings(p: Program, scenario: str) -> int:
    """Number of steps one scenario saves on its own, ignoring all others.

    Same-kind scenarios count every window of the given width inside a
    dependency-contiguous run.  Special-node scenarios save one step less
    than their translation length, except that a right Rate-1 child is
    already folded into its parent instruction, so those save one step.
    """
    if p.merged:
        raise InvalidParameters("potentials are defined on baseline programs")
    instrs = p.instructions
    if scenario in SAME_KIND_SCENARIOS:
        op, k = SAME_KIND_SCENARIOS[scenario]
        return sum(max(0, hi - lo - k + 1) * (k - 1) for lo, hi in _runs(instrs, op, p.pe))
    if scenario in CROSS_SCENARIOS:
        op_a, op_b, rel = CROSS_SCENARIOS[scenario]
        count, i = 0, 0
        while i + 1 < len(instrs):
            if _pair_ok(instrs[i], instrs[i + 1], op_a, op_b, rel, p.pe):
                count += 1
                i += 2
            else:
                i += 1
        return count
    if scenario in SPECIAL_SCENARIOS:
        pattern, stage_ok = SPECIAL_SCENARIOS[scenario]
        saved_each = 1 if pattern[-1][0] is Opcode.PR1 else len(pattern) - 1
        rr1, rr1_ok = _SPECIAL[Opcode.REP_RATE1]
        total = 0
        for i in range(len(instrs)):
            if not _match_special(instrs, i, pattern, stage_ok, p.pe):
                continue
            if scenario == "F-Rep" and _match_special(instrs, i, rr1, rr1_ok, p.pe):
                # Such a node is a Rep-Rate1 node, not a separate F-Rep chance.
                continue
            total += saved_each
        return total
    raise InvalidParameters(f"unknown scenario {scenario!r}; known: {', '.join(SCENARIOS)}")


def analyze_potentials(p: Program, scenario: str) -> float:
    """Potential saving of one scenario as a percentage of baseline cycles."""
    from .perf import latency

    saved = scenario_savings(p, scenario)
    cycles = latency(p).cycles
    return 100.0 * saved / cycles if cycles else 0.0


def program_stats(p: Program) -> dict:
    """Step count and opcode histogram."""
    hist = Counter(ins.op.value for ins in p.instructions)
    return {"steps": len(p.instructions), "ops": dict(sorted(hist.items()))}


def base_operation_count(p: Program) -> int:
    """Number of base operations, counting each constituent of a merged step."""
    return sum(len(ins.subs) if ins.subs else 1 for ins in p.instructions)


# ---------------------------------------------------------------------------
# Serialization.

def _ref(ins: Instruction) -> list:
    return [ins.op.value, ins.stage, ins.node.index]


def to_jsonl(p: Program) -> str:
    """Program listing, one JSON object per instruction, stable field order."""
    from .perf import cycles_of

    lines = []
    for step, ins in enumerate(p.instructions):
        rec = {"step": step, "op": ins.op.value, "stage": ins.stage, "node": ins.node.index,
               "subs": [_ref(s) for s in ins.subs], "cycles": cycles_of(ins, p.pe)}
        lines.append(json.dumps(rec))
    return "".join(line + "\n" for line in lines)


def _meta(p: Program) -> dict:
    lim = p.limits
    return {"N": p.spec.N, "K": p.spec.K, "frozen": list(p.spec.frozen), "pe": p.pe,
            "merged": p.merged,
            "limits": {"rep": lim.rep, "spc": lim.spc, "rate1": lim.rate1,
                       "ml": lim.ml, "repspc": lim.repspc}}


def meta_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def write_program(p: Program, path: str | Path) -> None:
    """Write the listing and a ``<path>.meta.json`` sidecar with spec and pe."""
    Path(path).write_text(to_jsonl(p))
    meta_path(path).write_text(json.dumps(_meta(p)) + "\n")


def from_jsonl(text: str, spec: CodeSpec, pe: int, merged: bool | None = None,
               limits: NodeLimits = NodeLimits()) -> Program:
    instrs = []
    try:
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            rec = json.loads(line)
            subs = tuple(Instruction(Opcode(op), NodeRef(int(st), int(ix)))
                         for op, st, ix in rec["subs"])
            instrs.append(Instruction(Opcode(rec["op"]),
                                      NodeRef(int(rec["stage"]), int(rec["node"])), subs))
    except (ValueError, KeyError, TypeError) as exc:
        raise InvalidParameters(f"malformed program listing at line {lineno}: {exc}") from exc
    if merged is None:
        merged = any(i.merged for i in instrs)
    return Program(tuple(instrs), spec, pe, merged, limits)


def read_program(path: str | Path, spec: CodeSpec | None = None,
                 pe: int | None = None) -> Program:
    """Read a listing; spec and pe default to the sidecar written by :func:`write_program`."""
    merged = None
    limits = NodeLimits()
    mp = meta_path(path)
    if mp.exists():
        try:
            meta = json.loads(mp.read_text())
            spec = spec or CodeSpec(meta["N"], meta["K"], tuple(meta["frozen"]))
            pe = pe or int(meta["pe"])
            merged = bool(meta["merged"])
            limits = NodeLimits(**meta.get("limits", {}))
        except (ValueError, KeyError, TypeError) as exc:
            if isinstance(exc, InvalidParameters):
                raise
            raise InvalidParameters(f"malformed program metadata {mp}: {exc}") from exc
    if spec is None or pe is None:
        raise InvalidParameters(f"no metadata for {path}; spec and pe must be given")
    return from_jsonl(Path(path).read_text(), spec, pe, merged, limits)
