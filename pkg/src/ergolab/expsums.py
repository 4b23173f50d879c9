"""Numerical checks of exponential-sum estimates.

Covers the van der Corput inequality, the Weyl-type bound for golden-mean
phases with an explicit recursive constant, the mixed bound for
m n^b alpha + n^g beta (exponent only) and the threshold scan that looks for
the first N where sup_beta |sum| drops below N^{1 - eta(N)}.
"""

from __future__ import annotations

import csv
import io
import math
from fractions import Fraction
from math import isqrt
from typing import Sequence

import numpy as np

from .averaging import eta, prefix_sums
from .sequences import default_beta_grid
from .torus import (
    PrecisionReal,
    add_fixed64,
    dirichlet_approx,
    e,
    fixed64_to_unit,
    frac_fixed64,
    make_constant,
)

VDC_SLACK = 2.0 ** -40


class ThresholdNotFoundError(LookupError):
    pass


def _golden():
    return make_constant("golden_mean", 256)


def _powers(N: int, k: int):
    n = np.arange(1, N + 1, dtype=np.int64)
    if k == 0:
        return np.ones(N, dtype=np.int64)
    if N ** k < (1 << 63):
        return n ** k
    return [int(x) ** k for x in n.tolist()]


def _scaled(mults, m: int):
    if isinstance(mults, np.ndarray) and abs(m) * int(mults[-1]) < (1 << 63):
        return m * mults
    return [m * int(x) for x in mults]


# ---------------------------------------------------------------------------
# van der Corput

def vdc_sides(v, H: int) -> tuple[float, float]:
    """Both sides of ||(1/N) sum v_n||^2 <= 2/H + (4/H) sum_{1<=h<H} |(1/N) sum_{n<=N-h} <v_{n+h}, v_n>|."""
    v = np.asarray(v, dtype=np.complex128)
    if v.ndim == 1:
        v = v[:, None]
    N = v.shape[0]
    if not 1 <= H <= N:
        raise ValueError(f"H must lie in [1, N={N}], got {H}")
    norms = np.sqrt(np.sum(np.abs(v) ** 2, axis=1))
    if norms.max() > 1 + 1e-12:
        raise ValueError("vectors must have norm at most 1")
    mean = v.sum(axis=0) / N
    lhs = float(np.sum(np.abs(mean) ** 2))
    corr = [abs(np.vdot(v[:N - h], v[h:])) / N for h in range(1, H)]
    rhs = 2.0 / H + 4.0 / H * math.fsum(corr)
    return lhs, rhs


def vdc_check(v, H: int) -> tuple[float, float, bool]:
    lhs, rhs = vdc_sides(v, H)
    return lhs, rhs, lhs <= rhs + VDC_SLACK


# ---------------------------------------------------------------------------
# golden-mean Weyl bound

def gsb_constant(b: int, strict: bool = False) -> float:
    """Explicit constant for |sum e(m n^b alpha + P(n))| <= C m^{2^{1-b}} N^{1-4^{1-b}}.

    C(1) = 3/2 and C(b+1) = 2 sqrt((b+1)^{2^{1-b}} C(b)).  With ``strict`` the
    step keeps the factor 2 lost when adding the two terms of the
    differencing estimate: C(b+1) = sqrt(8 (b+1)^{2^{1-b}} C(b)).
    """
    if b < 1:
        raise ValueError("b must be at least 1")
    C = 1.5
    for k in range(1, b):
        inner = (k + 1) ** (2.0 ** (1 - k)) * C
        C = math.sqrt(8 * inner) if strict else 2 * math.sqrt(inner)
    return C


def gsb_bound(m: int, N: int, b: int, strict: bool = False) -> float:
    return gsb_constant(b, strict) * m ** (2.0 ** (1 - b)) * N ** (1 - 4.0 ** (1 - b))


def coefficient_grid(alpha: PrecisionReal | None = None, kmax: int = 29) -> list[PrecisionReal]:
    """0, 1/7, 1/3 and frac(k alpha) for 1 <= k <= kmax (32 values by default)."""
    alpha = alpha or _golden()
    grid = [make_constant(0), make_constant("1/7"), make_constant("1/3")]
    for k in range(1, kmax + 1):
        grid.append(make_constant(Fraction(int(k * alpha.scaled_value) % (1 << alpha.precision_bits),
                                           1 << alpha.precision_bits)))
    return grid


def polynomial_samples(b: int, n_random: int = 32, seed: int = 0,
                       alpha: PrecisionReal | None = None) -> list[tuple[PrecisionReal, ...]]:
    """Coefficient tuples (c_1, ..., c_{b-1}) of P(n) = sum c_k n^k, deg P < b.

    The constant term is dropped since it does not change |sum|.  Each grid
    value is placed in every coefficient slot (others zero), then
    ``n_random`` seeded uniform draws follow.
    """
    if b < 1:
        raise ValueError("b must be at least 1")
    if b == 1:
        return [()]
    grid = coefficient_grid(alpha)
    samples, seen = [], set()
    for slot in range(b - 1):
        for c in grid:
            tup = tuple(c if i == slot else make_constant(0) for i in range(b - 1))
            key = tuple(x.scaled_value for x in tup)
            if key not in seen:
                seen.add(key)
                samples.append(tup)
    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        samples.append(tuple(make_constant(Fraction(float(x))) for x in rng.random(b - 1)))
    return samples


def weyl_sum(m: int, N: int, b: int, coeffs: Sequence[PrecisionReal] = (),
             alpha: PrecisionReal | None = None) -> complex:
    """sum_{n<=N} e(m n^b alpha + sum_k c_k n^k)."""
    alpha = alpha or _golden()
    words = [frac_fixed64(_scaled(_powers(N, b), m), alpha)]
    for k, c in enumerate(coeffs, start=1):
        if c.scaled_value:
            words.append(frac_fixed64(_powers(N, k), c))
    vals = e(fixed64_to_unit(add_fixed64(*words)))
    return complex(prefix_sums(vals, [N])[0])


def linear_sum_closed_form(m: int, N: int, alpha: PrecisionReal | None = None) -> float:
    """|sum_{n<=N} e(n theta)| = |sin(pi N theta) / sin(pi theta)| with theta = frac(m alpha)."""
    alpha = alpha or _golden()
    P = alpha.precision_bits
    theta = Fraction((m * alpha.scaled_value) % (1 << P), 1 << P)
    # reduce N theta mod 1 exactly before rounding
    nt = (N * theta) % 1
    return abs(math.sin(math.pi * float(nt)) / math.sin(math.pi * float(theta)))


def check_gsb(m: int, N: int, b: int, polynomial_samples_=None, alpha=None, strict: bool = False) -> dict:
    if m < 1 or N < 1 or b < 1:
        raise ValueError("m, N and b must be at least 1")
    samples = polynomial_samples(b, alpha=alpha) if polynomial_samples_ is None else polynomial_samples_
    bound = gsb_bound(m, N, b, strict)
    mags = [abs(weyl_sum(m, N, b, c, alpha)) for c in samples]
    worst = max(mags)
    return {"m": m, "N": N, "b": b, "constant": gsb_constant(b, strict), "bound": bound,
            "samples": len(samples), "sums": mags, "max_abs": worst,
            "max_ratio": worst / bound, "holds": worst <= bound * (1 + 1e-12)}


def gsb_base_case(m_max: int = 200, N_max: int = 10 ** 5, alpha=None) -> dict:
    """sup_{N<=N_max} |sum_{n<=N} e(m n alpha)| against 1.5 m for every m <= m_max."""
    alpha = alpha or _golden()
    n = np.arange(1, N_max + 1, dtype=np.int64)
    worst_ratio, witness = 0.0, None
    for m in range(1, m_max + 1):
        partial = np.abs(np.cumsum(e(fixed64_to_unit(frac_fixed64(m * n, alpha)))))
        i = int(partial.argmax())
        ratio = float(partial[i]) / (1.5 * m)
        if ratio > worst_ratio:
            worst_ratio, witness = ratio, (m, i + 1, float(partial[i]))
    return {"m_max": m_max, "N_max": N_max, "max_ratio": worst_ratio, "witness": witness,
            "holds": worst_ratio <= 1 + 1e-12}


def fibonacci(k: int) -> int:
    a, b = 0, 1
    for _ in range(k):
        a, b = b, a + b
    return a


def golden_distance_ok(q: int) -> bool:
    """Exact test of ||q alpha|| >= 1/(3q) for the golden mean alpha and q >= 1."""
    s = isqrt(5 * q * q)
    p0 = (q + s) // 2  # floor(q alpha)
    for p in (p0, p0 + 1):
        r = 2 * p - q  # |q alpha - p| = |q sqrt5 - r| / 2
        lhs = 3 * q * r
        if 5 * q * q > r * r:  # q sqrt5 > r
            if not 45 * q ** 4 >= (lhs + 2) ** 2:
                return False
        else:
            if not (lhs - 2 > 0 and (lhs - 2) ** 2 >= 45 * q ** 4):
                return False
    return True


def bad_approximation_check(q_values: Sequence[int] | None = None, index: int = 80) -> dict:
    """Exact check over Fibonacci q <= F_index plus q <= 10**4 (or an explicit list)."""
    if q_values is None:
        q_values = sorted(set(range(1, 10 ** 4 + 1)) | {fibonacci(k) for k in range(1, index + 1)})
    bad = [q for q in q_values if not golden_distance_ok(q)]
    return {"tested": len(q_values), "max_q": max(q_values), "violations": bad, "holds": not bad}


# ---------------------------------------------------------------------------
# mixed bound

def _mixed_sums(m: int, b: int, g: int, checkpoints: Sequence[int], beta_grid, alpha):
    top = checkpoints[-1]
    base = frac_fixed64(_scaled(_powers(top, b), m), alpha)
    pg = _powers(top, g)
    out = []
    for beta in beta_grid:
        vals = e(fixed64_to_unit(add_fixed64(base, frac_fixed64(pg, beta))))
        out.append(np.abs(prefix_sums(vals, checkpoints)))
    return np.array(out)


def bsg_threshold(g: int, eps: float) -> float:
    return 1 + eps - 2.0 ** (-2 * g - 1)


def check_bsg(m: int, b: int, g: int, N: int, eps: float = 0.05, beta_grid=None, alpha=None) -> dict:
    """Per-beta Dirichlet case labels and fitted exponents log|sum|/log N."""
    if not 1 <= b < g:
        raise ValueError("need 1 <= b < g")
    gam = 2.0 ** (-g - 2)
    if not 1 <= abs(m) <= N ** gam:
        raise ValueError(f"need 1 <= |m| <= N^{gam}")
    alpha = alpha or _golden()
    beta_grid = default_beta_grid() if beta_grid is None else beta_grid
    Q = math.floor(N ** (g - gam))
    sums = _mixed_sums(m, b, g, [N], beta_grid, alpha)[:, 0]
    thr = bsg_threshold(g, eps)
    rows = []
    for beta, s in zip(beta_grid, sums):
        if beta.source is not None:
            frac = beta.source % 1
        else:
            frac = Fraction(beta.scaled_value % (1 << beta.precision_bits), 1 << beta.precision_bits)
        r, q = dirichlet_approx(frac, Q)
        expo = math.log(s) / math.log(N) if s > 0 else float("-inf")
        rows.append({"beta": beta.label or repr(beta), "r": r, "s": q,
                     "case": 1 if q > N ** gam else 2, "abs_sum": float(s),
                     "exponent": expo, "flagged": expo > thr})
    return {"m": m, "b": b, "g": g, "N": N, "eps": eps, "threshold": thr, "Q": Q,
            "rows": rows, "max_exponent": max(r["exponent"] for r in rows),
            "holds": not any(r["flagged"] for r in rows)}


def bsg_slopes(m: int, b: int, g: int, N_list: Sequence[int], beta_grid=None, alpha=None) -> dict:
    """Least-squares slope of log|sum| against log N per beta (informational)."""
    alpha = alpha or _golden()
    beta_grid = default_beta_grid() if beta_grid is None else beta_grid
    Ns = sorted(N_list)
    sums = _mixed_sums(m, b, g, Ns, beta_grid, alpha)
    x = np.log(Ns)
    out = {}
    for beta, row in zip(beta_grid, sums):
        y = np.log(np.maximum(row, 1e-300))
        out[beta.label or repr(beta)] = float(np.polyfit(x, y, 1)[0])
    return out


# ---------------------------------------------------------------------------
# threshold scan

def pkey_threshold_scan(b: int, g: int, m: int, N_list: Sequence[int], beta_grid=None,
                        alpha=None) -> dict:
    """Smallest N in N_list from which sup_beta |sum e(m n^b alpha + n^g beta)| <= N^{1-eta(N)} holds on."""
    if b == g:
        raise ValueError("b and g must differ")
    if m == 0:
        raise ValueError("m must be nonzero")
    alpha = alpha or _golden()
    beta_grid = default_beta_grid() if beta_grid is None else beta_grid
    Ns = sorted(set(int(N) for N in N_list))
    if Ns[0] < 2:
        raise ValueError("N must be at least 2")
    sups = _mixed_sums(m, b, g, Ns, beta_grid, alpha).max(axis=0)
    bounds = [N ** (1 - eta(N)) for N in Ns]
    ok = [float(s) <= t for s, t in zip(sups, bounds)]
    rows = [{"N": N, "sup_abs_sum": float(s), "bound": t, "holds": h}
            for N, s, t, h in zip(Ns, sups, bounds, ok)]
    if not ok[-1]:
        raise ThresholdNotFoundError(f"bound fails at the largest scanned N={Ns[-1]}")
    i = len(ok) - 1
    while i > 0 and ok[i - 1]:
        i -= 1
    return {"b": b, "g": g, "m": m, "N0": Ns[i], "rows": rows}


def scan_to_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "sup_abs_sum", "bound"])
    for r in report["rows"]:
        w.writerow([r["N"], repr(r["sup_abs_sum"]), repr(r["bound"])])
    return buf.getvalue()
