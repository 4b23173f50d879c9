"""Fixed-point arithmetic on the circle group R/Z.

Phases such as frac(m * n**b * alpha + n**g * beta) are evaluated with plain
Python integers: every real constant is held as floor(x * 2**P) for a working
precision P, and each evaluation carries an explicit error radius.  Two entry
points exist:

* :func:`eval_phase` -- one certified evaluation, precision chosen from the
  size of the integer multipliers so that the error radius is below
  ``2**-guard_bits``;
* :func:`frac_fixed64` -- bulk evaluation of frac(m * x) for arrays of integer
  multipliers, returned as 64-bit fixed-point words with error below 2**-63.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

GUARD_BITS = 64
PRECISION_CAP = 16384

_M64 = (1 << 64) - 1
_M32 = np.uint64((1 << 32) - 1)
_S32 = np.uint64(32)
_TWO_PI = 2.0 * math.pi

_DECIMAL = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
_RATIO = re.compile(r"^[+-]?\d+\s*/\s*\d+$")
_MULTIPLE = re.compile(r"^(\d+)\s*\*\s*([a-z_0-9]+)$")


class PrecisionOverflowError(ArithmeticError):
    """Raised when a certified evaluation would need more than the hard precision cap."""


def _isqrt_scaled(k: int, precision_bits: int) -> int:
    # floor(sqrt(k) * 2**P); math.isqrt is an integer Newton iteration
    return math.isqrt(k << (2 * precision_bits))


def _golden_scaled(precision_bits: int) -> int:
    # floor((1 + sqrt 5) / 2 * 2**P) == floor((2**P + floor(sqrt5 * 2**P)) / 2)
    return ((1 << precision_bits) + _isqrt_scaled(5, precision_bits)) >> 1


_NAMED = {
    "golden_mean": _golden_scaled,
    "sqrt2": lambda p: _isqrt_scaled(2, p),
    "sqrt3": lambda p: _isqrt_scaled(3, p),
    "sqrt5": lambda p: _isqrt_scaled(5, p),
}
_ALIASES = {"alpha": "golden_mean", "phi": "golden_mean", "golden": "golden_mean"}


@dataclass(frozen=True)
class PrecisionReal:
    """A real constant stored as ``integer_part + frac_bits / 2**precision_bits``.

    The stored value is the floor of the true value at ``precision_bits``
    fractional bits, so ``integer_part`` carries the sign (floor convention).
    ``source`` holds the exact value when the constant is rational; named
    irrationals are re-derived from ``label``.
    """

    integer_part: int
    frac_bits: int
    precision_bits: int
    label: str | None = None
    source: Fraction | None = None

    def __post_init__(self):
        if not 0 <= self.frac_bits < (1 << self.precision_bits):
            raise ValueError("frac_bits out of range for precision")

    @property
    def scaled_value(self) -> int:
        return (self.integer_part << self.precision_bits) | self.frac_bits

    @property
    def exact(self) -> bool:
        """True when the stored bits equal the constant exactly (dyadic rationals)."""
        if self.source is None:
            return False
        return Fraction(self.scaled_value, 1 << self.precision_bits) == self.source

    @property
    def error_bound(self) -> Fraction:
        """Upper bound on ``|true - stored|`` (two units in the last place)."""
        if self.exact:
            return Fraction(0)
        return Fraction(2, 1 << self.precision_bits)

    def can_refine(self) -> bool:
        if self.source is not None or self.label in _NAMED:
            return True
        m = _MULTIPLE.match(self.label or "")
        return bool(m) and m.group(2) in _NAMED

    def at_precision(self, precision_bits: int) -> "PrecisionReal":
        """Return the same constant at another precision, re-deriving bits when needed."""
        if precision_bits == self.precision_bits:
            return self
        if precision_bits < self.precision_bits or self.exact:
            shift = self.precision_bits - precision_bits
            scaled = self.scaled_value >> shift if shift >= 0 else self.scaled_value << -shift
            return _from_scaled(scaled, precision_bits, self.label, self.source)
        if not self.can_refine():
            raise PrecisionOverflowError(
                f"constant {self.label or '<anonymous>'} cannot be refined beyond "
                f"{self.precision_bits} bits")
        return make_constant(self.label if self.source is None else self.source, precision_bits)

    def scaled(self, precision_bits: int) -> int:
        """floor(value * 2**precision_bits), up to the stored error."""
        return self.at_precision(precision_bits).scaled_value

    def frac128(self) -> int:
        """Fractional part as a 128-bit fixed-point integer."""
        return self.scaled(128) & ((1 << 128) - 1)

    def to_fraction(self) -> Fraction:
        return Fraction(self.scaled_value, 1 << self.precision_bits)

    def __float__(self) -> float:
        return self.scaled_value / (1 << self.precision_bits)

    def to_hex(self) -> str:
        width = (self.precision_bits + 3) // 4
        return format(self.frac_bits, f"0{width}x")

    @classmethod
    def from_hex(cls, digits: str, precision_bits: int, integer_part: int = 0,
                 label: str | None = None) -> "PrecisionReal":
        return cls(integer_part, int(digits, 16), precision_bits, label)

    def __repr__(self) -> str:
        name = self.label or "PrecisionReal"
        return f"<{name} ~{float(self):.17g} @{self.precision_bits}b>"


def _from_scaled(scaled: int, precision_bits: int, label=None, source=None) -> PrecisionReal:
    return PrecisionReal(scaled >> precision_bits, scaled & ((1 << precision_bits) - 1),
                         precision_bits, label, source)


def _parse_rational(text: str) -> Fraction:
    t = text.strip()
    if not (_DECIMAL.match(t) or _RATIO.match(t)):
        raise ValueError(f"malformed constant {text!r}")
    try:
        return Fraction(t.replace(" ", ""))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"malformed constant {text!r}") from exc


def make_constant(spec, precision_bits: int = 256) -> PrecisionReal:
    """Build a constant from a label or an exact rational.

    ``spec`` is one of the labels ``golden_mean`` (aliases ``alpha``, ``phi``),
    ``sqrt2``, ``sqrt3``, ``sqrt5``, or an integer multiple such as
    ``"7*sqrt3"``; a decimal or ``p/q`` digit string; or a
    :class:`~fractions.Fraction` / ``int``.

    >>> make_constant("0.5", 128).to_fraction()
    Fraction(1, 2)
    """
    if precision_bits < 64:
        raise ValueError("precision_bits must be at least 64")
    if isinstance(spec, (Fraction, int)) and not isinstance(spec, bool):
        value = Fraction(spec)
        return _from_scaled(math.floor(value * (1 << precision_bits)), precision_bits,
                            str(value), value)
    if not isinstance(spec, str):
        raise TypeError(f"cannot build a constant from {type(spec).__name__}")
    key = _ALIASES.get(spec.strip().lower(), spec.strip().lower())
    if key in _NAMED:
        return _from_scaled(_NAMED[key](precision_bits), precision_bits, key)
    multiple = _MULTIPLE.match(key)
    if multiple and _ALIASES.get(multiple.group(2), multiple.group(2)) in _NAMED:
        k = int(multiple.group(1))
        name = _ALIASES.get(multiple.group(2), multiple.group(2))
        extra = k.bit_length() + 1
        scaled = (k * _NAMED[name](precision_bits + extra)) >> extra
        return _from_scaled(scaled, precision_bits, f"{k}*{name}")
    if not re.match(r"^[+\-.\d]", spec.strip()):
        raise ValueError(f"unknown constant label {spec!r}")
    value = _parse_rational(spec)
    return _from_scaled(math.floor(value * (1 << precision_bits)), precision_bits, spec.strip(), value)


@dataclass(frozen=True)
class TorusValue:
    """A point ``numerator / 2**bits`` of [0, 1) with a certified error radius."""

    numerator: int
    bits: int
    error_radius: Fraction = Fraction(0)

    def __post_init__(self):
        if not 0 <= self.numerator < (1 << self.bits):
            raise ValueError("torus value outside [0, 1)")
        if self.error_radius < 0:
            raise ValueError("negative error radius")

    @property
    def value(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.bits)

    def __float__(self) -> float:
        return self.numerator / (1 << self.bits)

    @classmethod
    def from_fraction(cls, x, bits: int = 128) -> "TorusValue":
        """Round an exact rational to ``bits`` and record the rounding error."""
        x = Fraction(x) % 1
        k = math.floor(x * (1 << bits))
        return cls(k, bits, x - Fraction(k, 1 << bits))


@dataclass(frozen=True)
class PhaseTerm:
    """One summand ``coeff * n**exponent * base`` of a phase."""

    coeff: int
    exponent: int
    base: PrecisionReal

    def __post_init__(self):
        if self.exponent < 0:
            raise ValueError("exponent must be non-negative")


def required_precision(terms: Sequence[PhaseTerm], n: int, guard_bits: int = GUARD_BITS) -> int:
    nbits = abs(n).bit_length()
    need = sum(t.exponent * nbits + abs(t.coeff).bit_length() for t in terms)
    return need + guard_bits + len(terms).bit_length() + 2


def eval_phase(terms: Sequence[PhaseTerm], n: int, guard_bits: int = GUARD_BITS,
               cap: int = PRECISION_CAP) -> TorusValue:
    """frac(sum of coeff * n**exponent * base) with error radius below 2**-guard_bits.

    Bases stored at too low a precision are re-derived transparently; a
    required precision above ``cap`` raises :class:`PrecisionOverflowError`.
    """
    precision = max(64, required_precision(terms, n, guard_bits))
    if precision > cap:
        raise PrecisionOverflowError(f"phase needs {precision} bits, cap is {cap}")
    acc = 0
    radius = Fraction(0)
    for t in terms:
        mult = t.coeff * n ** t.exponent
        base = t.base.at_precision(precision)
        acc += mult * base.scaled_value
        radius += abs(mult) * base.error_bound
    mask = (1 << precision) - 1
    return TorusValue(acc & mask, precision, radius)


def dist_to_integers(t: TorusValue) -> TorusValue:
    """Distance from ``t`` to the nearest integer, as a value in [0, 1/2]."""
    k = min(t.numerator, (1 << t.bits) - t.numerator) if t.numerator else 0
    return TorusValue(k, t.bits, t.error_radius)


def _as_fraction(x) -> Fraction:
    if isinstance(x, PrecisionReal):
        return x.to_fraction()
    if isinstance(x, TorusValue):
        return x.value
    return Fraction(x)


def convergents(x) -> Iterable[tuple[int, int]]:
    """Continued-fraction convergents p/q of a rational (or stored) value."""
    x = _as_fraction(x)
    p0, q0, p1, q1 = 1, 0, math.floor(x), 1
    yield p1, q1
    rest = x - p1
    while rest:
        x = 1 / rest
        a = math.floor(x)
        rest = x - a
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        yield p1, q1


def dirichlet_approx(x, Q: int) -> tuple[int, int]:
    """Best convergent p/q of ``x`` with q <= Q; guarantees |x - p/q| <= 1/(q*Q)."""
    if Q < 1:
        raise ValueError("Q must be positive")
    best = None
    for p, q in convergents(x):
        if q > Q:
            break
        best = (p, q)
    return best


# ---------------------------------------------------------------------------
# bulk 64-bit fixed-point phases

def _mulhi64(a: np.ndarray, b: np.uint64) -> np.ndarray:
    """High 64 bits of the 128-bit products a * b (uint64 inputs)."""
    a0 = a & _M32
    a1 = a >> _S32
    b0 = np.uint64(int(b) & 0xFFFFFFFF)
    b1 = np.uint64(int(b) >> 32)
    p00 = a0 * b0
    p01 = a0 * b1
    p10 = a1 * b0
    p11 = a1 * b1
    mid = (p00 >> _S32) + (p01 & _M32) + (p10 & _M32)
    return p11 + (p01 >> _S32) + (p10 >> _S32) + (mid >> _S32)


def frac_fixed64(multipliers, base) -> np.ndarray:
    """floor(frac(m * base) * 2**64) for every integer multiplier m.

    ``base`` is a :class:`PrecisionReal` or a 128-bit fixed-point fraction
    (``int``).  The returned words are within 2 units (2**-63) below the true
    fractional parts, measured on the circle.
    """
    if isinstance(base, PrecisionReal):
        x128 = base.frac128()
        big = base if base.can_refine() or base.exact else None
    else:
        x128 = int(base) & ((1 << 128) - 1)
        big = None
    if isinstance(multipliers, np.ndarray) and multipliers.dtype.kind in "iu":
        arr = multipliers
        if arr.size == 0:
            return np.zeros(0, dtype=np.uint64)
        lo, hi = int(arr.min()), int(arr.max())
        ints = None
    else:
        ints = [int(m) for m in multipliers]
        if not ints:
            return np.zeros(0, dtype=np.uint64)
        lo, hi = min(ints), max(ints)
    bound = max(abs(lo), abs(hi))
    if bound <= _M64:
        if ints is None:
            mags = np.abs(arr.astype(np.int64)).astype(np.uint64) if arr.dtype.kind == "i" else arr.astype(np.uint64)
            neg = arr < 0 if arr.dtype.kind == "i" else None
        else:
            mags = np.array([abs(m) for m in ints], dtype=np.uint64)
            neg = np.array([m < 0 for m in ints]) if lo < 0 else None
        with np.errstate(over="ignore"):
            out = mags * np.uint64(x128 >> 64) + _mulhi64(mags, np.uint64(x128 & _M64))
            if neg is not None and neg.any():
                out = np.where(neg, np.uint64(0) - out, out)
        return out
    # multipliers beyond 64 bits: exact big-integer path
    if ints is None:
        ints = [int(m) for m in arr.tolist()]
    precision = bound.bit_length() + 68
    if big is not None:
        scaled = big.scaled(precision)
    elif precision <= 128:
        scaled = x128 >> (128 - precision)
    else:
        raise PrecisionOverflowError("raw 128-bit base cannot serve multipliers this large")
    shift = precision - 64
    return np.array([((m * scaled) >> shift) & _M64 for m in ints], dtype=np.uint64)


def fixed64_to_unit(words: np.ndarray) -> np.ndarray:
    """Convert 64-bit fixed-point fractions to floats in [0, 1)."""
    return (words >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


def frac_phases(multipliers, base) -> np.ndarray:
    """frac(m * base) as float64 in [0, 1), certified to 2**-62 before rounding."""
    return fixed64_to_unit(frac_fixed64(multipliers, base))


def add_fixed64(*words: np.ndarray) -> np.ndarray:
    """Sum of 64-bit fixed-point phases on the circle (wrapping addition)."""
    out = np.zeros_like(words[0])
    with np.errstate(over="ignore"):
        for w in words:
            out = out + w
    return out


def e(x):
    """e(x) = exp(2 pi i x), vectorised."""
    return np.exp(_TWO_PI * 1j * np.asarray(x, dtype=np.float64))
