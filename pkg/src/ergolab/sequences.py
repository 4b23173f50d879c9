"""Construction of the integer set S and its exponent schedule.

S is built from dyadic blocks: block ``j >= 1`` covers ``[2**(2j-1), 2**(2j+1))``;
an integer in the first half of the block belongs to S when its phase lies in
I+ = [0, 1/8] u [7/8, 1), one in the second half when its phase lies in
I- = [3/8, 5/8].  The phase is ``n**b_j * alpha`` (single and pointwise
variants) or ``(n**(l*b_j) + n**b_j) * alpha`` (multiple variant).
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np

from .torus import (
    PRECISION_CAP,
    PhaseTerm,
    PrecisionOverflowError,
    PrecisionReal,
    TorusValue,
    e,
    eval_phase,
    fixed64_to_unit,
    frac_fixed64,
    make_constant,
)

log = logging.getLogger(__name__)

CHUNK = 1 << 16


class Region(enum.IntEnum):
    NEITHER = 0
    PLUS = 1
    MINUS = 2


@dataclass(frozen=True)
class IntervalPair:
    """The two arcs of length 1/4 on which cos(2 pi x) is >= sqrt2/2 or <= -sqrt2/2."""

    plus: tuple = ((Fraction(0), Fraction(1, 8)), (Fraction(7, 8), Fraction(1)))
    minus: tuple = ((Fraction(3, 8), Fraction(5, 8)),)

    @property
    def boundaries(self) -> tuple[Fraction, ...]:
        return (Fraction(1, 8), Fraction(3, 8), Fraction(5, 8), Fraction(7, 8))

    def exact_region(self, x: Fraction) -> Region:
        # closed arcs; [7/8, 1) wraps onto 0
        if x <= Fraction(1, 8) or x >= Fraction(7, 8):
            return Region.PLUS
        if Fraction(3, 8) <= x <= Fraction(5, 8):
            return Region.MINUS
        return Region.NEITHER


INTERVALS = IntervalPair()


class AmbiguousPhaseError(ValueError):
    """The error radius of a phase straddles an interval endpoint."""


def classify_interval(t: TorusValue) -> Region:
    """Region of a certified torus value; raises if the radius reaches an endpoint."""
    x = t.value
    r = t.error_radius
    if r:
        for b in INTERVALS.boundaries:
            if abs(x - b) <= r:
                raise AmbiguousPhaseError(f"phase {float(x)} within {float(r)} of {b}")
    return INTERVALS.exact_region(x)


def classify_phase(terms: Sequence[PhaseTerm], n: int, guard_bits: int = 64,
                   cap: int = PRECISION_CAP) -> Region:
    """Certified region of a phase, doubling the guard bits near endpoints.

    At the precision cap the point is classified by its centre value and a
    warning is logged.
    """
    while True:
        try:
            return classify_interval(eval_phase(terms, n, guard_bits, cap))
        except AmbiguousPhaseError:
            guard_bits *= 2
        except PrecisionOverflowError:
            t = eval_phase(terms, n, guard_bits // 2, cap)
            log.warning("phase of n=%d unresolved at precision cap; using centre value", n)
            return INTERVALS.exact_region(t.value)


# ---------------------------------------------------------------------------
# variants and schedules

@dataclass(frozen=True)
class SequenceVariant:
    """``single`` (plain powers), ``multiple`` (uses n**(ell*b) + n**b) or ``pointwise``."""

    kind: str = "single"
    ell: int = 1

    def __post_init__(self):
        if self.kind not in ("single", "multiple", "pointwise"):
            raise ValueError(f"unknown variant {self.kind!r}")
        if self.ell < 1:
            raise ValueError("ell must be >= 1")

    def multiplier(self, n: int, b: int) -> int:
        if self.kind == "multiple":
            return n ** (self.ell * b) + n ** b
        return n ** b

    def multipliers(self, ns: np.ndarray, b: int):
        top = int(ns[-1]) if len(ns) else 0
        hi_exp = self.ell * b if self.kind == "multiple" else b
        if top ** hi_exp + top ** b < (1 << 63):
            ns = ns.astype(np.int64)
            out = ns ** b
            if self.kind == "multiple":
                out = out + ns ** (self.ell * b)
            return out
        return [self.multiplier(int(n), b) for n in ns.tolist()]

    def phase_terms(self, b: int, alpha: PrecisionReal) -> list[PhaseTerm]:
        terms = [PhaseTerm(1, b, alpha)]
        if self.kind == "multiple":
            terms.insert(0, PhaseTerm(1, self.ell * b, alpha))
        return terms

    def to_dict(self) -> dict:
        return {"kind": self.kind, "ell": self.ell}


SINGLE = SequenceVariant()
POINTWISE = SequenceVariant("pointwise")


@dataclass(frozen=True)
class ExponentSchedule:
    """The block exponents b_j, with the horizons used to certify each insertion."""

    entries: Mapping[int, int]
    bad_set: tuple[int, ...]
    variant: SequenceVariant = SINGLE
    horizons: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.bad_set:
            raise ValueError("bad set must be non-empty")
        stray = {b for b in self.entries.values() if b not in self.bad_set}
        if stray:
            raise ValueError(f"schedule uses exponents {sorted(stray)} outside the bad set")

    @property
    def default_exponent(self) -> int:
        return min(self.bad_set)

    def exponent(self, j: int) -> int:
        return self.entries.get(j, self.default_exponent)

    @classmethod
    def constant(cls, b: int, variant: SequenceVariant = SINGLE) -> "ExponentSchedule":
        return cls({}, (b,), variant)

    def to_dict(self) -> dict:
        return {
            "bad_set": list(self.bad_set),
            "variant": self.variant.to_dict(),
            "default_exponent": self.default_exponent,
            "entries": {str(j): b for j, b in sorted(self.entries.items())},
            "horizons": dict(self.horizons),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: Mapping) -> "ExponentSchedule":
        return cls({int(j): int(b) for j, b in d.get("entries", {}).items()},
                   tuple(d["bad_set"]), SequenceVariant(**d.get("variant", {})),
                   dict(d.get("horizons", {})))

    @classmethod
    def from_json(cls, text: str) -> "ExponentSchedule":
        return cls.from_dict(json.loads(text))


def block_of(n: int) -> tuple[int, bool]:
    """Block index j of n and whether n is in the first (I+) half."""
    if n < 2:
        raise ValueError("n must be >= 2: n = 1 belongs to no block")
    L = n.bit_length()
    return L // 2, L % 2 == 0


def block_bounds(j: int) -> tuple[int, int, int]:
    """(start, middle, end) of block j: first half [start, middle), second [middle, end)."""
    return 1 << (2 * j - 1), 1 << (2 * j), 1 << (2 * j + 1)


# ---------------------------------------------------------------------------
# membership

def _check_alpha(variant: SequenceVariant, alpha: PrecisionReal):
    if variant.kind == "pointwise" and alpha.label != "golden_mean":
        raise ValueError("the pointwise construction requires alpha = golden mean")


def member(n: int, schedule: ExponentSchedule, alpha: PrecisionReal,
           variant: SequenceVariant | None = None) -> bool:
    """Certified membership of n in S."""
    variant = variant or schedule.variant
    _check_alpha(variant, alpha)
    j, first = block_of(n)
    region = classify_phase(variant.phase_terms(schedule.exponent(j), alpha), n)
    return region == (Region.PLUS if first else Region.MINUS)


_LOW61 = np.uint64((1 << 61) - 1)
_S61 = np.uint64(61)


def _regions(words: np.ndarray, mults, alpha: PrecisionReal) -> np.ndarray:
    """Region codes from 64-bit phases, re-certifying words close to an endpoint."""
    octant = (words >> _S61).astype(np.int8)
    region = np.zeros(len(words), dtype=np.int8)
    region[(octant == 0) | (octant == 7)] = Region.PLUS
    region[(octant == 3) | (octant == 4)] = Region.MINUS
    low = words & _LOW61
    # true phase lies in [w, w + 2) units of 2**-64
    unsure = np.flatnonzero((low == 0) | (low >= _LOW61 - np.uint64(1)))
    for i in unsure.tolist():
        m = int(mults[i])
        region[i] = classify_phase([PhaseTerm(m, 0, alpha)], 1)
    return region


@dataclass
class BlockScan:
    """Phases and certified regions for a run of consecutive integers."""

    n: np.ndarray
    words: np.ndarray
    region: np.ndarray
    first_half: np.ndarray

    @property
    def in_S(self) -> np.ndarray:
        return np.where(self.first_half, self.region == Region.PLUS, self.region == Region.MINUS)

    @property
    def phase(self) -> np.ndarray:
        return fixed64_to_unit(self.words)


def scan(schedule: ExponentSchedule, alpha: PrecisionReal, n_max: int,
         variant: SequenceVariant | None = None, n_min: int = 2,
         chunk: int = CHUNK) -> Iterator[BlockScan]:
    """Stream block-structured phases for n in [max(n_min, 2), n_max]."""
    variant = variant or schedule.variant
    _check_alpha(variant, alpha)
    n = max(n_min, 2)
    while n <= n_max:
        j, _ = block_of(n)
        start, middle, end = block_bounds(j)
        stop = min(end, n_max + 1, n + chunk)
        ns = np.arange(n, stop, dtype=np.int64)
        mults = variant.multipliers(ns, schedule.exponent(j))
        words = frac_fixed64(mults, alpha)
        yield BlockScan(ns, words, _regions(words, mults, alpha), ns < middle)
        n = stop


def indicator_S(schedule: ExponentSchedule, alpha: PrecisionReal, n_max: int,
                variant: SequenceVariant | None = None) -> np.ndarray:
    """Boolean array ``ind`` with ``ind[n-1] == (n in S)`` for 1 <= n <= n_max."""
    out = np.zeros(max(n_max, 0), dtype=bool)
    for blk in scan(schedule, alpha, n_max, variant):
        out[blk.n - 1] = blk.in_S
    return out


def enumerate_S(schedule: ExponentSchedule, alpha: PrecisionReal, n_max: int,
                variant: SequenceVariant | None = None) -> np.ndarray:
    """The members of S up to n_max, increasing."""
    return np.concatenate([blk.n[blk.in_S] for blk in scan(schedule, alpha, n_max, variant)]
                          or [np.zeros(0, dtype=np.int64)])


def iter_S(schedule: ExponentSchedule, alpha: PrecisionReal, n_max: int | None = None,
           variant: SequenceVariant | None = None) -> Iterator[int]:
    """Lazily yield members of S (unbounded when ``n_max`` is None)."""
    n = 2
    while n_max is None or n <= n_max:
        top = n * 4 if n_max is None else min(n * 4, n_max)
        for blk in scan(schedule, alpha, top, variant, n_min=n):
            yield from blk.n[blk.in_S].tolist()
        n = top + 1


def first_terms(schedule: ExponentSchedule, alpha: PrecisionReal, count: int,
                variant: SequenceVariant | None = None) -> np.ndarray:
    """The first ``count`` elements s_1 < s_2 < ... of S."""
    out = []
    it = iter_S(schedule, alpha, None, variant)
    for _ in range(count):
        out.append(next(it))
    return np.array(out, dtype=np.int64)


# ---------------------------------------------------------------------------
# weight sequences f_n(phi, psi)

@dataclass(frozen=True)
class TrigPoly:
    """A trigonometric polynomial sum_k c_k e(k x)."""

    coeffs: Mapping[int, complex]

    @property
    def zero_integral(self) -> bool:
        return self.coeffs.get(0, 0) == 0

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros(x.shape, dtype=np.complex128)
        for k, c in sorted(self.coeffs.items()):
            out += c * e(k * x)
        return out


@dataclass(frozen=True)
class Indicator:
    """``1_region(x) - offset``, evaluated on certified regions."""

    region: Region
    offset: float = 0.0

    @property
    def zero_integral(self) -> bool:
        return self.region != Region.NEITHER and self.offset == 0.25

    def on_regions(self, region: np.ndarray) -> np.ndarray:
        return (region == self.region).astype(np.float64) - self.offset

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64) % 1.0
        if self.region == Region.PLUS:
            hit = (x <= 0.125) | (x >= 0.875)
        elif self.region == Region.MINUS:
            hit = (x >= 0.375) & (x <= 0.625)
        else:
            hit = ((x > 0.125) & (x < 0.375)) | ((x > 0.625) & (x < 0.875))
        return hit.astype(np.float64) - self.offset


PHI0 = Indicator(Region.PLUS, 0.25)
PSI0 = Indicator(Region.MINUS, 0.25)
ONE_PLUS = Indicator(Region.PLUS)
ONE_MINUS = Indicator(Region.MINUS)

Weight = Callable


def _weigh(fn, blk: BlockScan, mask: np.ndarray) -> np.ndarray:
    if isinstance(fn, Indicator):
        return fn.on_regions(blk.region[mask]).astype(np.complex128)
    if isinstance(fn, (int, float, complex)):
        return np.full(int(mask.sum()), fn, dtype=np.complex128)
    return np.asarray(fn(blk.phase[mask]), dtype=np.complex128)


def alternating_weights(schedule: ExponentSchedule, alpha: PrecisionReal, n_max: int,
                        phi, psi, variant: SequenceVariant | None = None) -> np.ndarray:
    """Array ``w`` with ``w[n-1] = f_n(phi, psi)`` for 1 <= n <= n_max (w[0] = 0)."""
    out = np.zeros(max(n_max, 0), dtype=np.complex128)
    for blk in scan(schedule, alpha, n_max, variant):
        fh = blk.first_half
        out[blk.n[fh] - 1] = _weigh(phi, blk, fh)
        out[blk.n[~fh] - 1] = _weigh(psi, blk, ~fh)
    return out


def alternating_weight(n: int, schedule: ExponentSchedule, alpha: PrecisionReal, phi, psi,
                       variant: SequenceVariant | None = None) -> complex:
    """f_n(phi, psi) for a single n >= 2."""
    variant = variant or schedule.variant
    j, first = block_of(n)
    fn = phi if first else psi
    terms = variant.phase_terms(schedule.exponent(j), alpha)
    if isinstance(fn, Indicator):
        return complex(float(classify_phase(terms, n) == fn.region) - fn.offset)
    if isinstance(fn, (int, float, complex)):
        return complex(fn)
    return complex(np.asarray(fn(float(eval_phase(terms, n)))).item())


# ---------------------------------------------------------------------------
# beta grid and the empirical J(b, l, eps)

def default_beta_grid(precision_bits: int = 192) -> list[PrecisionReal]:
    """Sample points standing in for "all real beta"."""
    grid = [make_constant(0, precision_bits), make_constant("golden_mean", precision_bits),
            make_constant("sqrt2", precision_bits), make_constant("1/3", precision_bits),
            make_constant("1/7", precision_bits)]
    grid += [make_constant(f"{k}*sqrt3", precision_bits) for k in range(1, 33)]
    return grid


class JNotFoundError(LookupError):
    """No block index certifies the requested slack below the horizon."""


def dyadic_checkpoints(horizon: int, start: int = 1) -> list[int]:
    out = []
    N = 1
    while N <= horizon:
        if N >= start:
            out.append(N)
        N *= 2
    return out


def block_statistics(b: int, l: int, horizon: int, alpha: PrecisionReal,
                     variant: SequenceVariant = SINGLE,
                     beta_grid: Sequence[PrecisionReal] | None = None,
                     ) -> tuple[list[int], np.ndarray, np.ndarray]:
    """Interval-frequency and exponential-sum discrepancies at dyadic N <= horizon.

    Returns ``(Ns, d_interval, d_expsum)`` where ``d_interval[i]`` is
    max over I+ / I- of |(1/N) #{n <= N : phase in I} - 1/4| and ``d_expsum[i]``
    is the sup over 1 <= l' <= l, g < b and the beta grid of
    |(1/N) sum e(l' c(n) alpha + n**g beta)|.
    """
    beta_grid = default_beta_grid() if beta_grid is None else beta_grid
    ns = np.arange(1, horizon + 1, dtype=np.int64)
    mults = variant.multipliers(ns, b)
    words = frac_fixed64(mults, alpha)
    octant = words >> _S61
    plus = np.cumsum((octant == 0) | (octant == 7))
    minus = np.cumsum((octant == 3) | (octant == 4))
    Ns = dyadic_checkpoints(horizon)
    idx = np.array(Ns) - 1
    d1 = np.maximum(np.abs(plus[idx] / (idx + 1) - 0.25), np.abs(minus[idx] / (idx + 1) - 0.25))
    d2 = np.zeros(len(Ns))
    for lp in range(1, l + 1):
        if isinstance(mults, np.ndarray):
            scaled = frac_fixed64(mults * lp, alpha) if int(mults[-1]) * lp < (1 << 63) else \
                frac_fixed64([int(m) * lp for m in mults.tolist()], alpha)
        else:
            scaled = frac_fixed64([m * lp for m in mults], alpha)
        for g in range(1, b):
            powers = ns ** g if horizon ** g < (1 << 63) else [int(n) ** g for n in ns.tolist()]
            for beta in beta_grid:
                with np.errstate(over="ignore"):
                    total = scaled + frac_fixed64(powers, beta)
                sums = np.cumsum(e(fixed64_to_unit(total)))
                d2 = np.maximum(d2, np.abs(sums[idx]) / (idx + 1))
    return Ns, d1, d2


def estimate_J(b: int, l: int, eps: float, horizon: int, alpha: PrecisionReal,
               variant: SequenceVariant = SINGLE,
               beta_grid: Sequence[PrecisionReal] | None = None) -> int:
    """Smallest block index whose tail discrepancies stay below ``eps`` up to ``horizon``.

    The result is certified only on the finite range of dyadic N in
    [2**(2j-1), horizon]; callers record the horizon next to it.
    """
    if horizon < 1024 or horizon & (horizon - 1):
        raise ValueError("horizon must be a power of two >= 2**10")
    Ns, d1, d2 = block_statistics(b, l, horizon, alpha, variant, beta_grid)
    worst = np.maximum(d1, d2)
    tail = np.maximum.accumulate(worst[::-1])[::-1]
    j = 1
    while (1 << (2 * j - 1)) <= horizon:
        k = Ns.index(1 << (2 * j - 1))
        if tail[k] <= eps:
            return j
        j += 1
    raise JNotFoundError(f"no J for b={b}, l={l}, eps={eps} below horizon {horizon}")


class ScheduleError(RuntimeError):
    def __init__(self, a_t: int, t: int, cause: Exception):
        super().__init__(f"could not certify insertion of exponent {a_t} (round t={t}): {cause}")
        self.a_t = a_t
        self.t = t


def build_schedule(B: Sequence[int], variant: SequenceVariant = SINGLE, J_max: int = 12,
                   horizon_budget: int = 1 << 14, alpha: PrecisionReal | None = None,
                   beta_grid: Sequence[PrecisionReal] | None = None) -> ExponentSchedule:
    """Schedule built by the insertion rounds J_t = max(J(a_t, t, 1/t), J_{t-1} + t).

    Round t writes a_t, a_{t-1}, ..., a_1 into blocks J_t, J_t + 1, ...; a
    finite B keeps cycling with its largest element in the lead position.
    Blocks left unspecified take the least element a_1.
    """
    bad = tuple(sorted(set(int(b) for b in B)))
    if not bad or bad[0] < 1:
        raise ValueError("B must be a non-empty set of positive integers")
    if len(bad) == 1:
        return ExponentSchedule({}, bad, variant)
    alpha = alpha or make_constant("golden_mean", 256)
    entries: dict[int, int] = {}
    horizons: dict[str, int] = {}
    J_prev = None
    t = 1
    while True:
        lead = min(t, len(bad))
        a_t = bad[lead - 1]
        try:
            J_est = estimate_J(a_t, t, 1.0 / t, horizon_budget, alpha, variant, beta_grid)
        except JNotFoundError as exc:
            raise ScheduleError(a_t, t, exc) from exc
        J_t = J_est if J_prev is None else max(J_est, J_prev + t)
        if J_t > J_max:
            break
        horizons[f"J_{t}"] = J_t
        horizons[f"J({a_t},{t},1/{t})"] = J_est
        for i in range(lead):
            if J_t + i <= J_max:
                entries[J_t + i] = bad[lead - 1 - i]
        J_prev = J_t
        t += 1
    horizons["horizon"] = horizon_budget
    return ExponentSchedule(entries, bad, variant, horizons)


# ---------------------------------------------------------------------------
# shipped schedules

_DATA = Path(__file__).with_name("data") / "schedules.json"


def _schedule_key(B: Sequence[int], variant: SequenceVariant) -> str:
    return f"{','.join(str(b) for b in sorted(set(B)))}|{variant.kind}|{variant.ell}"


def default_schedule(B: Sequence[int], variant: SequenceVariant = SINGLE, J_max: int = 12) -> ExponentSchedule:
    """Precomputed schedule for common B when available, else a fresh build."""
    if _DATA.exists():
        table = json.loads(_DATA.read_text())
        doc = table.get(_schedule_key(B, variant))
        if doc is not None and doc.get("J_max") == J_max:
            return ExponentSchedule.from_dict(doc["schedule"])
    return build_schedule(B, variant, J_max)
