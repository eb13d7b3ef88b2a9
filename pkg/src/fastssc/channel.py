"""BPSK over AWGN and a deterministic Monte-Carlo FER/BER campaign."""

from __future__ import annotations

import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .compiler import Program
from .polar import CodeSpec, InvalidParameters, encode
from .vm import QuantSpec, decode


def noise_variance(ebno_db: float, rate: float) -> float:
    return 1.0 / (2.0 * rate * 10.0 ** (ebno_db / 10.0))


def awgn_llrs(codeword, ebno_db: float, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Channel LLRs ``2 y / sigma^2`` for BPSK (bit b -> 1 - 2b) plus Gaussian noise."""
    c = np.asarray(codeword)
    var = noise_variance(ebno_db, rate)
    y = (1.0 - 2.0 * c) + rng.normal(0.0, math.sqrt(var), size=c.shape)
    return 2.0 * y / var


@dataclass(frozen=True)
class StopRule:
    min_frame_errors: int = 200
    max_frames: int = 1_000_000


@dataclass(frozen=True)
class SimPoint:
    ebno_db: float
    frames: int
    frame_errors: int
    bit_errors: int

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else float("nan")

    def ber(self, K: int) -> float:
        return self.bit_errors / (self.frames * K) if self.frames else float("nan")


@dataclass(frozen=True)
class SimReport:
    K: int
    seed: int
    points: tuple[SimPoint, ...] = field(default_factory=tuple)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("ebno_db,frames,frame_errors,bit_errors,fer,ber\n")
        for p in self.points:
            buf.write(f"{p.ebno_db:g},{p.frames},{p.frame_errors},{p.bit_errors},"
                      f"{p.fer:.6e},{p.ber(self.K):.6e}\n")
        return buf.getvalue()


def _run_batch(program: Program, quant: QuantSpec | None, ebno_db: float,
               seed: int, point: int, batch: int, size: int) -> tuple[int, int]:
    """Simulate one batch; its random stream depends only on (seed, point, batch)."""
    spec = program.spec
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(point, batch)))
    info = rng.integers(0, 2, size=(size, spec.K), dtype=np.uint8)
    x = encode(spec, info)
    llr = awgn_llrs(x, ebno_db, spec.rate, rng)
    u_hat, x_hat = decode(program, llr, quant)
    frame_err = int(np.count_nonzero(np.any(x_hat != x, axis=1)))
    bit_err = int(np.count_nonzero(u_hat[:, spec.info_indices] != info))
    return frame_err, bit_err


def montecarlo(spec: CodeSpec, program: Program, quant: QuantSpec | None, ebno_list,
               stop: StopRule = StopRule(), seed: int = 0, workers: int = 1,
               batch_size: int = 1000) -> SimReport:
    """Frame error and bit error rates at each Eb/N0 point.

    Frames are simulated in batches with independent random streams keyed
    by (seed, point index, batch index).  Batches are accounted in index
    order and the stop rule is checked after each one, so the report does
    not depend on the number of workers.  The last batch is truncated to
    honour ``max_frames``.
    """
    if program.spec != spec:
        raise InvalidParameters("program was compiled for a different code")
    if stop.max_frames <= 0:
        return SimReport(spec.K, seed, ())
    points = []
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        for pi, ebno in enumerate(ebno_list):
            frames = fe = be = 0
            batch = 0
            done = False
            while not done:
                sizes = []
                for k in range(max(1, workers)):
                    start = (batch + k) * batch_size
                    if start >= stop.max_frames:
                        break
                    sizes.append(min(batch_size, stop.max_frames - start))
                args = [(program, quant, float(ebno), seed, pi, batch + k, sz)
                        for k, sz in enumerate(sizes)]
                if pool is None:
                    results = [_run_batch(*a) for a in args]
                else:
                    results = list(pool.map(_run_batch, *zip(*args)))
                for sz, (f_err, b_err) in zip(sizes, results):
                    frames += sz
                    fe += f_err
                    be += b_err
                    batch += 1
                    if fe >= stop.min_frame_errors or frames >= stop.max_frames:
                        done = True
                        break
            points.append(SimPoint(float(ebno), frames, fe, be))
    finally:
        if pool is not None:
            pool.shutdown()
    return SimReport(spec.K, seed, tuple(points))


def ebno_at_fer(report: SimReport, target: float) -> float:
    """Eb/N0 where the FER curve crosses ``target``, by log-linear interpolation.

    Returns NaN if the sweep does not bracket the target.
    """
    pts = [p for p in report.points if p.frames and p.frame_errors]
    for a, b in zip(pts, pts[1:]):
        if a.fer >= target >= b.fer and a.fer != b.fer:
            t = (math.log10(a.fer) - math.log10(target)) / (math.log10(a.fer) - math.log10(b.fer))
            return a.ebno_db + t * (b.ebno_db - a.ebno_db)
    return float("nan")
