"""Command-line interface.

Machine-readable output (JSON, JSON-lines, CSV) goes to stdout or ``-o``;
human summaries go to stderr.  Exit status is 0 on success, 2 on usage
errors (bad flags, malformed input files, invalid parameters) and 1 on
runtime failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from .channel import StopRule, montecarlo
from .compiler import (CROSS_SCENARIOS, SAME_KIND_SCENARIOS, SPECIAL_SCENARIOS,
                       analyze_potentials, apply_merge_passes, compile_baseline,
                       read_program, to_jsonl, write_program)
from .perf import latency, theta_sp, utilization, words_baseline, words_proposed
from .polar import CodeSpec, InvalidParameters, construct_5g, encode
from .sc import sc_trace
from .vm import DecoderState, QuantSpec, trace

EXIT_RUNTIME = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def parse_ebno(text: str) -> list[float]:
    """``start:step:stop`` (inclusive) or a comma-separated list."""
    try:
        if ":" in text:
            start, step, stop = (float(t) for t in text.split(":"))
            if step <= 0:
                raise ValueError
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + i * step, 10) for i in range(count)]
        return _float_list(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad Eb/N0 range {text!r}; use start:step:stop")


def _quant(text: str) -> QuantSpec | None:
    if text.lower() in ("real", "float", "none"):
        return None
    try:
        return QuantSpec.parse(text)
    except InvalidParameters as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _add_spec_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("code")
    g.add_argument("--spec", type=Path, help="frozen-set JSON file {\"N\",\"K\",\"frozen\"}")
    g.add_argument("--n", type=int, help="block length N (5G construction)")
    g.add_argument("--k", type=int, help="information bits K (5G construction)")


def _spec_from(args, required: bool = True) -> CodeSpec | None:
    if args.spec is not None:
        try:
            return CodeSpec.load(args.spec)
        except OSError as exc:
            raise UsageError(f"cannot read {args.spec}: {exc}")
    if args.n is not None and args.k is not None:
        return construct_5g(args.n, args.k)
    if required:
        raise UsageError("give --spec FILE or both --n and --k")
    return None


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------------------

def cmd_construct(args) -> None:
    spec = construct_5g(args.n, args.k)
    _emit(spec.to_json() + "\n", args.output)
    _note(f"PC({spec.N},{spec.K}): {len(spec.frozen)} frozen positions")


def cmd_encode(args) -> None:
    spec = _spec_from(args)
    bits = args.info.strip()
    if set(bits) - {"0", "1"}:
        raise UsageError("--info must be a string of 0/1 characters")
    x = encode(spec, np.array([int(b) for b in bits], dtype=np.uint8))
    _emit("".join(str(int(b)) for b in x) + "\n", args.output)


def _build(args):
    spec = _spec_from(args)
    base = compile_baseline(spec, args.pe)
    return spec, base


def cmd_compile(args) -> None:
    _, base = _build(args)
    prog = base if args.no_merge else apply_merge_passes(base)
    if args.output is None:
        sys.stdout.write(to_jsonl(prog))
    else:
        write_program(prog, args.output)
    lat = latency(prog)
    _note(f"{'baseline' if args.no_merge else 'merged'} program: "
          f"{lat.steps} steps, {lat.cycles} cycles")


def analysis(prog, base) -> dict:
    """The ``analyze`` JSON report for a program and its baseline."""
    N, pe = prog.spec.N, prog.pe
    lat = latency(prog)
    lat_b = latency(base)
    in_domain = 4 <= pe and 4 * pe <= N
    packed = prog.merged
    words = None
    util = None
    if in_domain:
        words = words_proposed(N, pe) if packed else words_baseline(N, pe)
        util = round(utilization(N, pe, packed), 4)
    return {
        "steps": lat.steps,
        "cycles": lat.cycles,
        "words_alpha": words,
        "words_beta": words,
        "utilization": util,
        "theta_sp": round(theta_sp(N, pe), 4) if 4 * pe <= N else None,
        "savings_vs_baseline": {
            "steps_pct": round(100.0 * (lat_b.steps - lat.steps) / lat_b.steps, 4),
            "cycles_pct": round(100.0 * (lat_b.cycles - lat.cycles) / lat_b.cycles, 4),
        },
    }


def cmd_analyze(args) -> None:
    if args.program is not None:
        try:
            prog = read_program(args.program, _spec_from(args, required=False), args.pe)
        except OSError as exc:
            raise UsageError(f"cannot read {args.program}: {exc}")
        base = compile_baseline(prog.spec, prog.pe, prog.limits)
    else:
        if args.pe is None:
            raise UsageError("--pe is required without --program")
        _, base = _build(args)
        prog = apply_merge_passes(base) if args.merged else base
    _emit(json.dumps(analysis(prog, base), indent=2) + "\n", args.output)


def cmd_simulate(args) -> None:
    spec, base = _build(args)
    prog = base if args.no_merge else apply_merge_passes(base)
    stop = StopRule(args.min_errors, args.max_frames)
    report = montecarlo(spec, prog, args.quant, args.ebno, stop, args.seed, args.workers,
                        args.batch)
    _emit(report.to_csv(), args.output)
    _note(f"simulated {sum(p.frames for p in report.points)} frames")


def _read_frame(path: Path, N: int) -> np.ndarray:
    try:
        obj = json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read frame {path}: {exc}")
    if isinstance(obj, dict):
        obj = obj.get("llr")
    try:
        llr = np.asarray(obj, dtype=np.float64)
    except (TypeError, ValueError):
        llr = None
    if llr is None or llr.shape != (N,):
        raise UsageError(f"frame must be a JSON list of {N} LLRs (or {{\"llr\": [...]}})")
    return llr


def cmd_trace(args) -> None:
    try:
        prog = read_program(args.program)
    except OSError as exc:
        raise UsageError(f"cannot read {args.program}: {exc}")
    llr = _read_frame(args.frame, prog.spec.N)
    if args.reference:
        _emit("".join(line + "\n" for line in sc_trace(prog.spec, llr)), args.output)
        return
    state = DecoderState.load(prog, llr, args.quant)
    records = trace(prog, state)
    _emit("".join(json.dumps(r) + "\n" for r in records), args.output)
    _note(f"{len(records)} steps; x_hat="
          + "".join(str(int(b)) for b in state.codeword_mem[0]))


# ---------------------------------------------------------------------------
# report

def _csv(rows: list[list]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _k_for(N: int, rate: float) -> int:
    K = int(round(N * rate))
    if not 0 < K <= N:
        raise UsageError(f"rate {rate} gives K={K} for N={N}")
    return K


def report_potentials(N: int, rates, pes, scenarios) -> str:
    rows = [["rate", "scenario"] + [f"pe_{pe}" for pe in pes]]
    for rate in rates:
        spec = construct_5g(N, _k_for(N, rate))
        progs = {pe: compile_baseline(spec, pe) for pe in pes}
        for sc in scenarios:
            rows.append([rate, sc] + [f"{analyze_potentials(progs[pe], sc):.2f}" for pe in pes])
    return _csv(rows)


def report_savings(N: int, rates, pes) -> str:
    rows = [["code", "rate", "pe", "ops_savings_pct", "time_step_savings_pct"]]
    for rate in rates:
        spec = construct_5g(N, _k_for(N, rate))
        for pe in pes:
            base = compile_baseline(spec, pe)
            s = analysis(apply_merge_passes(base), base)["savings_vs_baseline"]
            rows.append([f"PC({N},{spec.K})", rate, pe, f"{s['steps_pct']:.2f}",
                         f"{s['cycles_pct']:.2f}"])
    return _csv(rows)


def report_latency(N: int, rates, pes) -> str:
    rows = [["rate", "pe", "steps", "cycles", "theta_sp"]]
    for rate in rates:
        spec = construct_5g(N, _k_for(N, rate))
        for pe in pes:
            lat = latency(compile_baseline(spec, pe))
            th = f"{theta_sp(N, pe):.3f}" if 4 * pe <= N else ""
            rows.append([rate, pe, lat.steps, lat.cycles, th])
    return _csv(rows)


def report_error_rates(N: int, rates, pe: int, quant: QuantSpec, ebno, stop: StopRule,
                       seed: int, workers: int) -> str:
    rows = [["rate", "mode", "ebno_db", "frames", "frame_errors", "bit_errors", "fer", "ber"]]
    for rate in rates:
        spec = construct_5g(N, _k_for(N, rate))
        prog = apply_merge_passes(compile_baseline(spec, pe))
        for mode, q in (("float", None), ("Q(%d,%d,%d)" % (quant.qi, quant.qc, quant.qf), quant)):
            rep = montecarlo(spec, prog, q, ebno, stop, seed, workers)
            for p in rep.points:
                rows.append([rate, mode, f"{p.ebno_db:g}", p.frames, p.frame_errors,
                             p.bit_errors, f"{p.fer:.6e}", f"{p.ber(spec.K):.6e}"])
    return _csv(rows)


def cmd_report(args) -> None:
    N = args.n or 1024
    if (args.table is None) == (args.figure is None):
        raise UsageError("give exactly one of --table {2,3,5} or --figure {6,9}")
    if args.table == 2:
        text = report_potentials(N, args.rates or [0.5], args.pe or [32, 64, 128],
                                 list(SAME_KIND_SCENARIOS) + list(CROSS_SCENARIOS))
    elif args.table == 3:
        text = report_potentials(N, args.rates or [0.5], args.pe or [32, 64, 128],
                                 list(SPECIAL_SCENARIOS))
    elif args.table == 5:
        text = report_savings(N, args.rates or [0.25, 0.5, 0.75], args.pe or [32, 64, 128])
    elif args.figure == 6:
        text = report_latency(N, args.rates or [0.5], args.pe or [16, 32, 64, 128, 256])
    else:
        pes = args.pe or [64]
        text = report_error_rates(N, args.rates or [0.5], pes[0], args.quant or QuantSpec(),
                                  args.ebno or parse_ebno("1.0:0.25:3.0"),
                                  StopRule(args.min_errors, args.max_frames), args.seed,
                                  args.workers)
    _emit(text, args.output)


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fastssc",
        description="Polar-code Fast-SSC instruction compiler, decoder VM and analysis tools.")
    sub = ap.add_subparsers(dest="command", required=True)

    def out_arg(p):
        p.add_argument("-o", "--output", type=Path, help="output file (default: stdout)")

    p = sub.add_parser("construct", help="5G frozen set for PC(N,K) as JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    out_arg(p)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("encode", help="encode an information word")
    _add_spec_args(p)
    p.add_argument("--info", required=True, help="K information bits as a 0/1 string")
    out_arg(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("compile", help="compile a program listing (JSON-lines)")
    _add_spec_args(p)
    p.add_argument("--pe", type=int, required=True, help="processing elements (power of two >= 4)")
    p.add_argument("--no-merge", action="store_true", help="emit the baseline program only")
    out_arg(p)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("analyze", help="latency, memory and utilization report as JSON")
    _add_spec_args(p)
    p.add_argument("--pe", type=int)
    p.add_argument("--merged", action="store_true", help="analyze the merged program")
    p.add_argument("--program", type=Path, help="analyze a compiled listing instead")
    out_arg(p)
    p.set_defaults(func=cmd_analyze)

    def sim_args(p, defaults=True):
        p.add_argument("--ebno", type=parse_ebno,
                       default=parse_ebno("1.0:0.25:4.0") if defaults else None,
                       help="Eb/N0 in dB: start:step:stop or a comma list")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--min-errors", type=int, default=200, help="stop after this many frame errors")
        p.add_argument("--max-frames", type=int, default=1_000_000)

    p = sub.add_parser("simulate", help="Monte-Carlo FER/BER over AWGN as CSV")
    _add_spec_args(p)
    p.add_argument("--pe", type=int, default=64)
    p.add_argument("--quant", type=_quant, default=QuantSpec(),
                   help="Qi,Qc,Qf (default 6,5,1) or 'real'")
    p.add_argument("--no-merge", action="store_true")
    p.add_argument("--batch", type=int, default=1000, help="frames per batch")
    sim_args(p)
    out_arg(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("trace", help="step-by-step execution dump (JSON-lines)")
    p.add_argument("--program", type=Path, required=True)
    p.add_argument("--frame", type=Path, required=True, help="JSON list of N channel LLRs")
    p.add_argument("--quant", type=_quant, default=QuantSpec(),
                   help="Qi,Qc,Qf (default 6,5,1) or 'real'")
    p.add_argument("--reference", action="store_true",
                   help="text dump of the reference SC decoder instead")
    out_arg(p)
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("report", help="CSV data for the merge, latency and error-rate studies")
    p.add_argument("--table", type=int, choices=(2, 3, 5),
                   help="2: branch-merge potentials, 3: special-node potentials, 5: savings")
    p.add_argument("--figure", type=int, choices=(6, 9),
                   help="6: latency and theta_sp vs pe, 9: FER/BER float vs quantized")
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--pe", type=_int_list)
    p.add_argument("--rates", type=_float_list)
    p.add_argument("--quant", type=_quant)
    sim_args(p, defaults=False)
    out_arg(p)
    p.set_defaults(func=cmd_report)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    try:
        args.func(args)
    except (UsageError, InvalidParameters) as exc:
        _note(f"fastssc {args.command}: error: {exc}")
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - report any runtime failure
        _note(f"fastssc {args.command}: failed: {exc}")
        return EXIT_RUNTIME
    return 0


if __name__ == "__main__":
    sys.exit(main())
