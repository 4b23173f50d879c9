"""Checkpointed averages and the statistics built on them.

All partial sums go through :func:`prefix_sums`, which accumulates each
segment between checkpoints with :func:`math.fsum` and carries the running
total as an exact list of non-overlapping floats.  The reported partial sums
are therefore independent of chunking and thread count.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .sequences import (
    ExponentSchedule,
    SequenceVariant,
    alternating_weights,
    default_beta_grid,
    indicator_S,
)
from .torus import PrecisionReal, e, fixed64_to_unit, frac_fixed64

CHUNK = 1 << 14


def thread_count(threads: int | None = None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("ERGOLAB_THREADS")
    return max(1, int(env)) if env else 1


# ---------------------------------------------------------------------------
# exact accumulation

def _grow(partials: list[float], x: float) -> None:
    # Shewchuk's non-overlapping partials (exact running sum)
    i = 0
    for y in partials:
        if abs(x) < abs(y):
            x, y = y, x
        hi = x + y
        lo = y - (hi - x)
        if lo:
            partials[i] = lo
            i += 1
        x = hi
    partials[i:] = [x]


def _expansion(seg: list[float]) -> tuple[float, float, float]:
    s1 = math.fsum(seg)
    s2 = math.fsum(seg + [-s1])
    s3 = math.fsum(seg + [-s1, -s2])
    return s1, s2, s3


class ExactAccumulator:
    """Running sum of float segments, exact up to a 2**-150 relative residue per segment."""

    def __init__(self):
        self._parts: list[float] = []

    def add(self, values: Sequence[float]) -> None:
        for x in _expansion(list(values)):
            if x:
                _grow(self._parts, x)

    @property
    def value(self) -> float:
        return math.fsum(self._parts)


def prefix_sums(values: np.ndarray, checkpoints: Iterable[int]) -> np.ndarray:
    """Compensated partial sums ``sum(values[:N])`` for each checkpoint N."""
    values = np.asarray(values)
    cps = list(checkpoints)
    complex_input = np.iscomplexobj(values)
    re_acc, im_acc = ExactAccumulator(), ExactAccumulator()
    out = np.zeros(len(cps), dtype=np.complex128 if complex_input else np.float64)
    prev = 0
    for i, N in enumerate(cps):
        if N < prev:
            raise ValueError("checkpoints must be increasing")
        for lo in range(prev, N, CHUNK):
            seg = values[lo:min(N, lo + CHUNK)]
            if complex_input:
                re_acc.add(seg.real.tolist())
                im_acc.add(seg.imag.tolist())
            else:
                re_acc.add(seg.tolist())
        prev = N
        out[i] = complex(re_acc.value, im_acc.value) if complex_input else re_acc.value
    return out


def serial_sum(values: np.ndarray) -> complex:
    """Reference sum of a prefix, recomputed from scratch."""
    values = np.asarray(values)
    return complex(math.fsum(values.real.tolist()), math.fsum(np.imag(values).tolist()))


# ---------------------------------------------------------------------------
# traces

@dataclass(frozen=True)
class Checkpoint:
    N: int
    avg: complex
    partial_sum: complex


@dataclass
class AverageTrace:
    """Partial averages (1/N) sum_{n <= N} a_n at increasing checkpoints."""

    checkpoints: list[Checkpoint]
    meta: dict = field(default_factory=dict)

    @property
    def Ns(self) -> np.ndarray:
        return np.array([c.N for c in self.checkpoints], dtype=np.int64)

    @property
    def avgs(self) -> np.ndarray:
        return np.array([c.avg for c in self.checkpoints], dtype=np.complex128)

    def at(self, N: int) -> complex:
        for c in self.checkpoints:
            if c.N == N:
                return c.avg
        raise KeyError(N)

    def upto(self, N: int) -> "AverageTrace":
        return AverageTrace([c for c in self.checkpoints if c.N <= N], dict(self.meta))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "re_avg", "im_avg", "abs_avg"])
        for c in self.checkpoints:
            w.writerow([c.N, repr(c.avg.real), repr(c.avg.imag), repr(abs(c.avg))])
        return buf.getvalue()


def trace_from_values(values: np.ndarray, checkpoints: Sequence[int], meta=None) -> AverageTrace:
    """Trace of the averages of ``values`` (``values[n-1]`` is the n-th summand)."""
    cps = [int(N) for N in checkpoints]
    if cps and cps[-1] > len(values):
        raise ValueError("checkpoint beyond the supplied values")
    sums = prefix_sums(np.asarray(values, dtype=np.complex128), cps)
    return AverageTrace([Checkpoint(N, complex(s) / N, complex(s)) for N, s in zip(cps, sums)],
                        dict(meta or {}))


def exp_average_trace(summand: Callable[[np.ndarray], np.ndarray], checkpoints: Sequence[int],
                      meta=None, threads: int | None = None) -> AverageTrace:
    """Average trace of a vectorised summand ``n -> a_n`` (n is a 1-based int64 array).

    Summand chunks may be evaluated on worker threads; accumulation is always
    in index order.
    """
    cps = sorted(int(N) for N in checkpoints)
    if not cps:
        return AverageTrace([], dict(meta or {}))
    if cps[0] < 1:
        raise ValueError("checkpoints must be positive")
    top = cps[-1]
    starts = list(range(1, top + 1, CHUNK))

    def chunk(lo):
        n = np.arange(lo, min(lo + CHUNK, top + 1), dtype=np.int64)
        return np.asarray(summand(n), dtype=np.complex128) * np.ones(len(n))

    workers = thread_count(threads)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(chunk, starts))
    else:
        parts = [chunk(lo) for lo in starts]
    return trace_from_values(np.concatenate(parts), cps, meta)


def dyadic(N_max: int, start: int = 1) -> list[int]:
    out, N = [], 1
    while N <= N_max:
        if N >= start:
            out.append(N)
        N *= 2
    return out


def geometric_checkpoints(gamma: float, K: int, start: int = 1) -> list[int]:
    """Distinct values of [gamma**k] for 0 <= k <= K, at least ``start``."""
    out: list[int] = []
    for k in range(K + 1):
        N = math.floor(gamma ** k)
        if N >= start and (not out or N > out[-1]):
            out.append(N)
    return out


def cauchy_defect(trace: AverageTrace, window: int = 2) -> float:
    """max |avg_{2N} - avg_N| over the last ``window`` consecutive dyadic checkpoint pairs."""
    pts = [c for c in trace.checkpoints if c.N & (c.N - 1) == 0]
    pairs = [(a, b) for a, b in zip(pts, pts[1:]) if b.N == 2 * a.N]
    if len(pairs) < window:
        raise ValueError(f"trace has {len(pairs)} dyadic pairs, need {window}")
    return max(abs(b.avg - a.avg) for a, b in pairs[-window:])


def sequence_exp_trace(s_values: np.ndarray, beta: PrecisionReal, g: int,
                       checkpoints: Sequence[int], coeff: int = 1) -> AverageTrace:
    """Averages of e(coeff * s_n**g * beta) along the sequence (indexed by n)."""
    s = np.asarray(s_values, dtype=np.int64)
    top = int(s.max()) if len(s) else 0
    if abs(coeff) * top ** g < (1 << 63):
        mults = coeff * s ** g
    else:
        mults = [coeff * int(x) ** g for x in s.tolist()]
    vals = e(fixed64_to_unit(frac_fixed64(mults, beta)))
    return trace_from_values(vals, checkpoints, {"summand": f"e({coeff}*s_n^{g}*beta)",
                                                 "beta": repr(beta)})


# ---------------------------------------------------------------------------
# divergence gap

@dataclass(frozen=True)
class GapRecord:
    j: int
    N_lo: int
    N_hi: int
    gap: float
    b_j: int

    def as_row(self):
        return [self.j, self.N_lo, self.N_hi, repr(self.gap)]


# Lower bound for the limiting gap obtained by bounding cos by -1 on the
# early part of S and by +-sqrt(2)/2 on the last block.
GAP_LIMIT = (3 * math.sqrt(2) - 2) / 32
# The limiting gap itself when the phases equidistribute inside I+ and I-:
# the mean of cos(2 pi x) over either interval is +-(2 sqrt 2 / pi), giving sqrt(2)/(3 pi).
GAP_EXACT_LIMIT = math.sqrt(2) / (3 * math.pi)


def divergence_gap(schedule: ExponentSchedule, alpha: PrecisionReal, b: int,
                   j_range: Iterable[int], variant: SequenceVariant | None = None,
                   weights="S", scheduled_only: bool = True,
                   max_n: int = 1 << 25) -> list[GapRecord]:
    """Gaps A(2**(2j)) - A(2**(2j+1)) with A(N) = (1/N) sum_{n<=N} w_n cos(2 pi phase_b(n)).

    ``w_n`` is the indicator of S (``weights="S"``) or a constant.  With
    ``scheduled_only`` only blocks where b_j == b are reported (and at least
    one is required).  Along blocks with b_j = b the gap tends to
    ``GAP_EXACT_LIMIT`` ~ 0.150, above the cruder lower bound ``GAP_LIMIT`` ~ 0.0701.
    """
    variant = variant or schedule.variant
    js = sorted(j_range)
    if scheduled_only:
        js = [j for j in js if schedule.exponent(j) == b]
        if not js:
            raise ValueError(f"exponent {b} does not occur in the schedule on the requested blocks")
    top = 1 << (2 * js[-1] + 1)
    if top > max_n:
        raise ValueError(f"blocks up to j={js[-1]} need n <= {top}, beyond budget {max_n}")
    ns = np.arange(1, top + 1, dtype=np.int64)
    phase = fixed64_to_unit(frac_fixed64(variant.multipliers(ns, b), alpha))
    w = indicator_S(schedule, alpha, top, variant).astype(np.float64) if weights == "S" \
        else np.full(top, float(weights))
    vals = w * np.cos(2 * math.pi * phase)
    cps = sorted({1 << (2 * j) for j in js} | {1 << (2 * j + 1) for j in js})
    sums = dict(zip(cps, prefix_sums(vals, cps)))
    out = []
    for j in js:
        lo, hi = 1 << (2 * j), 1 << (2 * j + 1)
        out.append(GapRecord(j, lo, hi, float(sums[lo] / lo - sums[hi] / hi), schedule.exponent(j)))
    return out


def gaps_to_csv(records: Sequence[GapRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["j", "N_lo", "N_hi", "gap"])
    for r in records:
        w.writerow(r.as_row())
    return buf.getvalue()


# ---------------------------------------------------------------------------
# dyadic concatenation

def wierdl_concatenate(u: Callable[[np.ndarray, int], np.ndarray], N_max: int,
                       checkpoints: Sequence[int] | None = None):
    """u_n = u_{n,j} for 2**j <= n < 2**(j+1); returns (values, trace)."""
    parts = []
    j = 0
    while (1 << j) <= N_max:
        n = np.arange(1 << j, min(1 << (j + 1), N_max + 1), dtype=np.int64)
        parts.append(np.asarray(u(n, j), dtype=np.complex128) * np.ones(len(n)))
        j += 1
    values = np.concatenate(parts)
    trace = trace_from_values(values, checkpoints or dyadic(N_max), {"summand": "concatenated u_{n,j}"})
    return values, trace


def wierdl_bound(u: Callable[[np.ndarray, int], np.ndarray], N: int, j0: int,
                 horizon: int | None = None) -> dict:
    """Term-by-term bound on |(1/N) sum_{n<=N} u_n| from the dyadic splitting.

    With eps(i) = max over 2**i - 1 <= M <= horizon (M >= 1) of
    |(1/M) sum_{m<=M} u_{m,i}|, the block i contributes at most 3 * 2**i * eps(i)
    and the final partial block at most 2 N eps(j):

        |avg_N| <= |head|/N + (3/N) sum_{j0<=i<j} 2**i eps(i) + 2 eps(j)

    where head is the sum over n < 2**j0 and 2**j <= N < 2**(j+1).
    """
    horizon = horizon or N
    if N > horizon or N < (1 << j0):
        raise ValueError("need 2**j0 <= N <= horizon")
    j = N.bit_length() - 1
    m = np.arange(1, horizon + 1, dtype=np.int64)

    def eps(i):
        avg = np.abs(np.cumsum(np.asarray(u(m, i), dtype=np.complex128) * np.ones(len(m)))) / m
        return float(avg[max(1, (1 << i) - 1) - 1:].max())

    values, _ = wierdl_concatenate(u, N, [N])
    head = abs(serial_sum(values[:(1 << j0) - 1])) / N
    eps_i = {i: eps(i) for i in range(j0, j + 1)}
    middle = 3.0 / N * sum((1 << i) * eps_i[i] for i in range(j0, j))
    tail = 2.0 * eps_i[j]
    actual = abs(serial_sum(values)) / N
    bound = head + middle + tail
    return {"N": N, "j0": j0, "head": head, "middle": middle, "tail": tail,
            "bound": bound, "actual": actual, "eps": eps_i, "holds": actual <= bound * (1 + 1e-12)}


# ---------------------------------------------------------------------------
# eta / rho profile

def eta(N) -> float:
    """eta(N) = (log2 N)**-1/2 for N >= 2."""
    if N < 2:
        raise ValueError("eta is defined for N >= 2")
    return math.log2(N) ** -0.5


def rho(N: int) -> float:
    """rho(N) = (1/N) sum_{i=1}^{[log2 N]} 2**(i (1 - eta(2**i)))."""
    L = N.bit_length() - 1
    return math.fsum(2.0 ** (i - math.sqrt(i)) for i in range(1, L + 1)) / N


@dataclass(frozen=True)
class EtaProfile:
    """The decay profile eta and the companion rho as callables."""

    def eta(self, N) -> float:
        return eta(N)

    def rho(self, N) -> float:
        return rho(N)

    def decay(self, N) -> float:
        """N**(-eta(N)) = 2**(-sqrt(log2 N))."""
        return 2.0 ** -math.sqrt(math.log2(N))


def eta_block_sum(l: int) -> float:
    return math.fsum(2.0 ** (i * (1 - eta(2 ** i))) for i in range(1, l + 1))


def eta_block_bound(l: int) -> float:
    return 2.0 ** (l - math.sqrt(l / 2) + 2)


def eta_checks(gamma: float, K: int, l_max: int, N_max: int = 10 ** 6,
               tail_start: int = 80, tail_tol: float = 1e-6) -> dict:
    """Finite checks of the three eta properties and the explicit block-sum bound.

    Every failure is reported with a witness.  ``passed`` is the conjunction.
    """
    if gamma <= 1:
        raise ValueError("gamma must exceed 1")
    prof = EtaProfile()
    report: dict = {"gamma": gamma, "K": K, "l_max": l_max}

    samples = sorted({max(2, math.floor(2 ** (q / 4))) for q in range(4, 4 * int(math.log2(N_max)) + 1)
                      if 2 ** (q / 4) <= N_max})
    decays = [prof.decay(N) for N in samples]
    bad = [(a, b) for a, b, x, y in zip(samples, samples[1:], decays, decays[1:]) if not y < x]
    report["eta1"] = {"samples": len(samples), "violations": bad, "passed": not bad}

    def series(term):
        ks, incs = [], []
        for k in range(K + 1):
            N = math.floor(gamma ** k)
            if N >= 2:
                ks.append(k)
                incs.append(term(N))
        partial = np.cumsum(incs)
        tail = [x for k, x in zip(ks, incs) if k > tail_start]
        worst = max(tail) if tail else 0.0
        monotone = bool(np.all(np.diff(partial) >= 0))
        witness = next(((k, x) for k, x in zip(ks, incs) if k > tail_start and x >= tail_tol), None)
        return {"partial_sum": float(partial[-1]) if len(partial) else 0.0,
                "max_tail_increment": worst, "monotone": monotone,
                "witness": witness, "passed": monotone and witness is None}

    report["eta2"] = series(prof.decay)
    report["eta3"] = series(prof.rho)
    viol = [(l, eta_block_sum(l), eta_block_bound(l)) for l in range(1, l_max + 1)
            if not eta_block_sum(l) <= eta_block_bound(l)]
    report["block_bound"] = {"violations": viol, "passed": not viol}
    report["passed"] = all(report[k]["passed"] for k in ("eta1", "eta2", "eta3", "block_bound"))
    return report


# ---------------------------------------------------------------------------
# weighted sup averages

@dataclass
class SupTrace:
    """For each checkpoint N the sup over the beta grid of |(1/N) sum f_n e(n**g beta)|."""

    Ns: np.ndarray
    sups: np.ndarray
    argmax: list
    meta: dict = field(default_factory=dict)

    @property
    def running(self) -> np.ndarray:
        return np.cumsum(self.sups)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "sup_abs_avg", "running_sum"])
        for N, s, r in zip(self.Ns.tolist(), self.sups.tolist(), self.running.tolist()):
            w.writerow([N, repr(s), repr(r)])
        return buf.getvalue()


def weighted_sup_average(phi, psi, schedule: ExponentSchedule, alpha: PrecisionReal, g: int,
                         beta_grid: Sequence[PrecisionReal] | None, checkpoints: Sequence[int],
                         variant: SequenceVariant | None = None,
                         require_zero_integral: bool = True) -> SupTrace:
    """sup over the grid of the weighted averages of f_n(phi, psi) e(n**g beta)."""
    if require_zero_integral:
        for fn in (phi, psi):
            if hasattr(fn, "zero_integral") and not fn.zero_integral:
                raise ValueError("phi and psi must have zero integral")
    beta_grid = default_beta_grid() if beta_grid is None else beta_grid
    cps = [int(N) for N in checkpoints]
    top = cps[-1]
    w = alternating_weights(schedule, alpha, top, phi, psi, variant)
    ns = np.arange(1, top + 1, dtype=np.int64)
    powers = ns ** g if top ** g < (1 << 63) else [int(n) ** g for n in ns.tolist()]
    sups = np.zeros(len(cps))
    arg = [None] * len(cps)
    idx = np.array(cps)
    for beta in beta_grid:
        if not np.any(w):
            break
        vals = w * e(fixed64_to_unit(frac_fixed64(powers, beta)))
        mags = np.abs(prefix_sums(vals, cps)) / idx
        for i in np.flatnonzero(mags > sups).tolist():
            sups[i] = mags[i]
            arg[i] = beta.label
    return SupTrace(np.array(cps, dtype=np.int64), sups, arg, {"g": g})
