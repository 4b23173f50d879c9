"""Concrete measure-preserving systems and multiple ergodic averages along sequences.

Two systems are modelled: a rotation of the circle and the skew product

    R(t1, t2, t3) = (t1 + alpha, t2 + 2 t1 + alpha, t3 + beta)

on the 3-torus.  Points are stored as integers modulo 2**P, so the group law
holds exactly in the model; ``error_radius`` bounds the distance from the
model orbit to the orbit of the true irrational rotation numbers.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .averaging import AverageTrace, dyadic, prefix_sums, thread_count, trace_from_values
from .torus import PrecisionReal, add_fixed64, e, fixed64_to_unit, frac_fixed64, make_constant

POINT_BITS = 192
DEFAULT_POINTS = 256


@dataclass(frozen=True)
class TorusPoint:
    """Point of T^d as integers modulo 2**bits with an error radius per coordinate."""

    coords: tuple
    bits: int = POINT_BITS
    error_radius: Fraction = Fraction(0)

    def __post_init__(self):
        mask = (1 << self.bits) - 1
        object.__setattr__(self, "coords", tuple(int(c) & mask for c in self.coords))

    @classmethod
    def from_floats(cls, values: Sequence[float], bits: int = POINT_BITS) -> "TorusPoint":
        return cls(tuple(int(Fraction(v) % 1 * (1 << bits)) for v in values), bits)

    def to_floats(self) -> tuple:
        return tuple(c / (1 << self.bits) for c in self.coords)

    def same_as(self, other: "TorusPoint") -> bool:
        return self.coords == other.coords and self.bits == other.bits


@dataclass(frozen=True)
class CharacterFn:
    """f(t) = e(k . t) for an integer frequency vector k."""

    k: tuple

    def __post_init__(self):
        object.__setattr__(self, "k", tuple(int(x) for x in self.k))

    def phase(self, point: TorusPoint) -> int:
        return sum(k * c for k, c in zip(self.k, point.coords)) & ((1 << point.bits) - 1)

    def __call__(self, point: TorusPoint) -> complex:
        return complex(e(_unit(self.phase(point), point.bits)))

    def integral(self) -> complex:
        return 1.0 + 0j if not any(self.k) else 0j


def _unit(x: int, bits: int) -> float:
    return (x >> (bits - 53)) * 2.0 ** -53 if bits >= 53 else x / (1 << bits)


def _model_const(scaled: int, bits: int) -> PrecisionReal:
    # phase coefficient taken as exact in the model
    scaled &= (1 << bits) - 1
    return PrecisionReal(0, scaled, bits, None, Fraction(scaled, 1 << bits))


class _System:
    bits: int
    dim: int

    def phase_coeffs(self, fn: CharacterFn, i: int, point: TorusPoint) -> tuple[int, int, int]:
        """(A0, A1, A2) with f(R^{i m} x) = e(A0 + m A1 + m^2 A2), as integers mod 2**bits."""
        raise NotImplementedError

    def random_points(self, count: int = DEFAULT_POINTS, seed: int = 0) -> list[TorusPoint]:
        rng = np.random.default_rng(seed)
        words = rng.integers(0, 1 << 63, size=(count, self.dim, 3), dtype=np.int64)
        pts = []
        for row in words.tolist():
            coords = []
            for a, b, c in row:
                coords.append(((a << 126) | (b << 63) | c) >> (189 - self.bits) if self.bits <= 189
                              else ((a << 126) | (b << 63) | c) << (self.bits - 189))
            pts.append(TorusPoint(tuple(coords), self.bits))
        return pts


@dataclass(frozen=True)
class RotationSystem(_System):
    """x -> x + theta on the circle."""

    theta: PrecisionReal
    bits: int = POINT_BITS
    dim: int = 1

    def iterate(self, point: TorusPoint, n: int) -> TorusPoint:
        th = self.theta.scaled(self.bits)
        return TorusPoint((point.coords[0] + n * th,), self.bits,
                          point.error_radius + abs(n) * self.theta.at_precision(self.bits).error_bound)

    def phase_coeffs(self, fn, i, point):
        (k,) = fn.k
        th = self.theta.scaled(self.bits)
        return (fn.phase(point), i * k * th, 0)


@dataclass(frozen=True)
class SkewSystemT3(_System):
    alpha: PrecisionReal
    beta: PrecisionReal
    bits: int = POINT_BITS
    dim: int = 3

    def __post_init__(self):
        for c in (self.alpha, self.beta):
            if c.exact:
                raise ValueError("rotation numbers must be irrational constants")

    def iterate(self, point: TorusPoint, n: int) -> TorusPoint:
        return iterate_R(self, point, n)

    def phase_coeffs(self, fn, i, point):
        k1, k2, k3 = fn.k
        t1 = point.coords[0]
        a = self.alpha.scaled(self.bits)
        b = self.beta.scaled(self.bits)
        # f(R^{m} x) with m = i*s: e(k.t + m (k1 a + 2 k2 t1 + k3 b) + m^2 k2 a)
        return (fn.phase(point), i * (k1 * a + 2 * k2 * t1 + k3 * b), i * i * k2 * a)


def iterate_R(system: SkewSystemT3, point: TorusPoint, n: int) -> TorusPoint:
    """R^n(t) = (t1 + n a, t2 + 2 n t1 + n^2 a, t3 + n b); any integer n."""
    P = system.bits
    a = system.alpha.scaled(P)
    b = system.beta.scaled(P)
    err = point.error_radius
    ea = system.alpha.at_precision(P).error_bound
    eb = system.beta.at_precision(P).error_bound
    radius = err * (1 + 2 * abs(n)) + n * n * ea + abs(n) * max(ea, eb)
    return TorusPoint(_skew_coords(a, b, point.coords, n), P, radius)


def _skew_coords(a: int, b: int, coords: tuple, n: int) -> tuple:
    t1, t2, t3 = coords
    return (t1 + n * a, t2 + 2 * n * t1 + n * n * a, t3 + n * b)


def _check_functions(ell: int, functions: Sequence[CharacterFn], dim: int):
    if ell < 1:
        raise ValueError("ell must be at least 1")
    if len(functions) != ell:
        raise ValueError(f"expected {ell} functions, got {len(functions)}")
    for f in functions:
        if len(f.k) != dim:
            raise ValueError(f"character {f.k} does not match dimension {dim}")


def _sequence_ints(s_list) -> tuple[np.ndarray | list, int]:
    s = list(int(x) for x in s_list)
    top = max((abs(x) for x in s), default=0)
    return (np.array(s, dtype=np.int64) if top * top < (1 << 63) else s), top


def point_values(system: _System, s_list, functions: Sequence[CharacterFn],
                 point: TorusPoint) -> np.ndarray:
    """a_n = prod_i f_i(R^{i s_n} x) for a single point, via the phase polynomial."""
    P = system.bits
    c0 = c1 = c2 = 0
    for i, f in enumerate(functions, start=1):
        a0, a1, a2 = system.phase_coeffs(f, i, point)
        c0, c1, c2 = c0 + a0, c1 + a1, c2 + a2
    s, top = _sequence_ints(s_list)
    sq = s * s if isinstance(s, np.ndarray) else [x * x for x in s]
    w0 = np.full(len(s), (c0 & ((1 << P) - 1)) >> (P - 64), dtype=np.uint64)
    words = add_fixed64(w0, frac_fixed64(s, _model_const(c1, P)), frac_fixed64(sq, _model_const(c2, P)))
    return e(fixed64_to_unit(words))


@dataclass
class MultiAverageResult:
    traces: list
    defects: dict
    exact_defects: dict | None
    points: list
    seed: int | None
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["point_id", "N", "re_avg", "im_avg"])
        for pid, tr in enumerate(self.traces):
            for c in tr.checkpoints:
                w.writerow([pid, c.N, repr(c.avg.real), repr(c.avg.imag)])
        return buf.getvalue()

    def summary(self) -> dict:
        return {"seed": self.seed, "points": len(self.points),
                "l2_defects": {str(k): v for k, v in self.defects.items()},
                "exact_l2_defects": None if self.exact_defects is None
                else {str(k): v for k, v in self.exact_defects.items()},
                **self.meta}

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def multi_average(system: _System, s_list, ell: int, functions: Sequence[CharacterFn],
                  sample_points: Sequence[TorusPoint] | None = None, checkpoints=None,
                  seed: int = 0, n_points: int = DEFAULT_POINTS, exact: bool = True,
                  threads: int | None = None) -> MultiAverageResult:
    """Averages (1/N) sum_n prod_i f_i(R^{i s_n} x) at each point, with L^2 Cauchy defects.

    The defect at N is the root mean square over points of |avg_2N - avg_N|.
    For characters the exact integral over the torus is also computed.
    """
    _check_functions(ell, functions, system.dim)
    s_list = list(s_list)
    cps = list(checkpoints) if checkpoints is not None else dyadic(len(s_list))
    pts = list(sample_points) if sample_points is not None else system.random_points(n_points, seed)

    def one(pt):
        return trace_from_values(point_values(system, s_list, functions, pt), cps)

    workers = thread_count(threads)
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(workers) as pool:
            traces = list(pool.map(one, pts))
    else:
        traces = [one(p) for p in pts]
    defects = {}
    for N in cps:
        if 2 * N in cps:
            diffs = [abs(t.at(2 * N) - t.at(N)) ** 2 for t in traces]
            defects[N] = math.sqrt(math.fsum(diffs) / len(diffs))
    exact_defects = None
    if exact:
        exact_defects = {N: l2_defect_exact(system, s_list, functions, N) for N in defects}
    return MultiAverageResult(traces, defects, exact_defects, pts,
                              seed if sample_points is None else None,
                              {"ell": ell, "characters": [list(f.k) for f in functions]})


def l2_defect_exact(system: _System, s_list, functions: Sequence[CharacterFn], N: int) -> float:
    """|| avg_2N - avg_N ||_{L^2} for characters, integrated exactly over the torus.

    The phase at x is k.t + s A1(x) + s^2 A2, where A1 depends on the point
    only through 2 K t1 (K = sum of i * k2_i on the skew product, or via k.t on
    the rotation).  Terms whose x-dependent frequencies differ are orthogonal,
    so the integral is a sum over groups of equal frequency.
    """
    zero = TorusPoint(tuple([0] * system.dim), system.bits)
    P = system.bits
    c1 = c2 = 0
    for i, f in enumerate(functions, start=1):
        _, a1, a2 = system.phase_coeffs(f, i, zero)
        c1, c2 = c1 + a1, c2 + a2
    if isinstance(system, SkewSystemT3):
        K = sum(i * f.k[1] for i, f in enumerate(functions, start=1))
        freq_of = lambda s: 2 * K * s  # noqa: E731
    else:
        freq_of = lambda s: 0  # noqa: E731
    # the x-independent constant k.t only multiplies by a unimodular factor
    s = [int(x) for x in s_list[:2 * N]]
    sarr, _ = _sequence_ints(s)
    sq = sarr * sarr if isinstance(sarr, np.ndarray) else [x * x for x in s]
    vals = e(fixed64_to_unit(add_fixed64(frac_fixed64(sarr, _model_const(c1, P)),
                                         frac_fixed64(sq, _model_const(c2, P)))))
    coef = np.where(np.arange(2 * N) < N, 1 / (2 * N) - 1 / N, 1 / (2 * N))
    groups: dict = {}
    for idx, sv in enumerate(s):
        groups.setdefault(freq_of(sv), []).append(idx)
    total = []
    for idxs in groups.values():
        z = coef[idxs] * vals[idxs]
        total.append(abs(complex(prefix_sums(z, [len(z)])[0])) ** 2)
    return math.sqrt(math.fsum(total))


def lflw_characters(k: int) -> tuple[CharacterFn, CharacterFn]:
    """f1 = e(k(-2 t2 + t3)), f2 = e(k t2)."""
    return CharacterFn((0, -2 * k, k)), CharacterFn((0, k, 0))


def lflw_reduction_check(system: SkewSystemT3, k: int, s_list, N: int,
                         points: Sequence[TorusPoint]) -> dict:
    """Both sides of the reduction identity at each point; max |difference|.

    Left: (1/N) sum f1(R^{s_n} x) f2(R^{2 s_n} x) with orbits from iterate_R.
    Right: e(k(t3 - t2)) (1/N) sum e(k(2 alpha s_n^2 + beta s_n)) from bulk phases.
    """
    f1, f2 = lflw_characters(k)
    s = [int(x) for x in list(s_list)[:N]]
    if len(s) < N:
        raise ValueError("sequence shorter than N")
    P = system.bits
    sarr, _ = _sequence_ints(s)
    sq = sarr * sarr if isinstance(sarr, np.ndarray) else [x * x for x in s]
    inner = e(fixed64_to_unit(add_fixed64(
        frac_fixed64(sq, _model_const(2 * k * system.alpha.scaled(P), P)),
        frac_fixed64(sarr, _model_const(k * system.beta.scaled(P), P)))))
    inner_avg = complex(prefix_sums(inner, [N])[0]) / N
    a, b = system.alpha.scaled(P), system.beta.scaled(P)
    mask = (1 << P) - 1
    worst, rows = 0.0, []
    for pid, x in enumerate(points):
        phases = []
        for sv in s:
            y1 = _skew_coords(a, b, x.coords, sv)
            y2 = _skew_coords(a, b, x.coords, 2 * sv)
            ph = sum(k_ * c for k_, c in zip(f1.k, y1)) + sum(k_ * c for k_, c in zip(f2.k, y2))
            phases.append(_unit(ph & mask, P))
        z = e(np.array(phases))
        left = complex(math.fsum(z.real.tolist()), math.fsum(z.imag.tolist())) / N
        t2, t3 = x.coords[1], x.coords[2]
        right = complex(e(_unit((k * (t3 - t2)) & ((1 << P) - 1), P))) * inner_avg
        d = abs(left - right)
        worst = max(worst, d)
        rows.append({"point_id": pid, "left": [left.real, left.imag],
                     "right": [right.real, right.imag], "discrepancy": d})
    return {"k": k, "N": N, "points": len(points), "max_discrepancy": worst, "rows": rows}


def golden_skew_system(beta: str = "sqrt2", bits: int = POINT_BITS) -> SkewSystemT3:
    return SkewSystemT3(make_constant("golden_mean", bits), make_constant(beta, bits), bits)


def rotation_trace_matches(theta: PrecisionReal, s_list, k: int, checkpoints) -> tuple[AverageTrace, AverageTrace]:
    """Rotation average of e(k x) at x = 0 and the exponential average of e(k s_n theta)."""
    rot = RotationSystem(theta)
    res = multi_average(rot, s_list, 1, [CharacterFn((k,))],
                        sample_points=[TorusPoint((0,), rot.bits)], checkpoints=checkpoints, exact=False)
    s, _ = _sequence_ints(s_list)
    ktheta = _model_const(k * theta.scaled(rot.bits), rot.bits)
    direct = trace_from_values(e(fixed64_to_unit(frac_fixed64(s, ktheta))), checkpoints)
    return res.traces[0], direct
