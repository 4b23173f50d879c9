"""Polynomial families in n with integer coefficients in parameters h1, h2, ...

The van der Corput rewrite of a family, type vectors and the induction that
drives every family down to the empty one.  Polynomials are stored as
canonical monomial maps, so equal polynomials compare equal and hash alike.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from math import comb
from typing import Iterable, Sequence


def _norm(exps: Sequence[int]) -> tuple[int, ...]:
    exps = list(exps)
    while exps and exps[-1] == 0:
        exps.pop()
    return tuple(exps)


def _mono_mul(a: tuple, b: tuple) -> tuple:
    k = max(len(a), len(b))
    return _norm([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(k)])


class HPoly:
    """Integer polynomial in n (variable 0) and h1..hr (variables 1..r).

    Monomials are exponent tuples (e_n, e_h1, ..., e_hr) without trailing zeros.
    """

    __slots__ = ("_terms", "_key")

    def __init__(self, terms: dict | None = None):
        clean = {}
        for m, c in (terms or {}).items():
            c = int(c)
            if c:
                m = _norm(m)
                clean[m] = clean.get(m, 0) + c
                if not clean[m]:
                    del clean[m]
        self._terms = clean
        self._key = None

    # construction
    @classmethod
    def const(cls, c: int) -> "HPoly":
        return cls({(): c})

    @classmethod
    def var(cls, index: int) -> "HPoly":
        """Variable 0 is n, variable i >= 1 is h_i."""
        return cls({tuple([0] * index + [1]): 1})

    @classmethod
    def n(cls) -> "HPoly":
        return cls.var(0)

    @classmethod
    def h(cls, i: int) -> "HPoly":
        if i < 1:
            raise ValueError("h parameters are numbered from 1")
        return cls.var(i)

    @classmethod
    def parse(cls, text: str) -> "HPoly":
        return _Parser(text).parse_poly()

    # inspection
    @property
    def terms(self) -> dict:
        """Map n-degree -> coefficient polynomial in the h's (n-free HPoly)."""
        out: dict[int, dict] = {}
        for m, c in self._terms.items():
            d = m[0] if m else 0
            out.setdefault(d, {})[_norm((0,) + m[1:])] = c
        return {d: HPoly(t) for d, t in sorted(out.items())}

    @property
    def monomials(self) -> dict:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def n_degree(self) -> int:
        """Degree in n; -1 for the zero polynomial."""
        if not self._terms:
            return -1
        return max((m[0] if m else 0) for m in self._terms)

    def num_params(self) -> int:
        return max((len(m) - 1 for m in self._terms), default=0) if self._terms else 0

    def leading_coefficient(self) -> "HPoly":
        return self.terms[self.n_degree()]

    def leading_term(self) -> "HPoly":
        d = self.n_degree()
        return HPoly({m: c for m, c in self._terms.items() if (m[0] if m else 0) == d})

    def constant_term(self) -> "HPoly":
        """Part without n."""
        return HPoly({m: c for m, c in self._terms.items() if not m or m[0] == 0})

    def canonical(self) -> tuple:
        """Unique representation: n-degree descending, then monomials descending."""
        if self._key is None:
            self._key = tuple(sorted(self._terms.items(), key=lambda mc: _mono_order(mc[0]), reverse=True))
        return self._key

    def sort_key(self) -> tuple:
        """Ordering used inside families: by n-degree, then coefficients from the top down."""
        return (self.n_degree(), tuple((_mono_order(m), c) for m, c in self.canonical()))

    # arithmetic
    def __add__(self, other):
        other = _coerce(other)
        t = dict(self._terms)
        for m, c in other._terms.items():
            t[m] = t.get(m, 0) + c
        return HPoly(t)

    __radd__ = __add__

    def __neg__(self):
        return HPoly({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        other = _coerce(other)
        t: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                t[m] = t.get(m, 0) + c1 * c2
        return HPoly(t)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        out, base = HPoly.const(1), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, int):
            other = HPoly.const(other)
        return isinstance(other, HPoly) and self._terms == other._terms

    def __hash__(self):
        return hash(self.canonical())

    def substitute(self, index: int, value: "HPoly") -> "HPoly":
        """Replace variable ``index`` by the polynomial ``value``."""
        value = _coerce(value)
        out = HPoly()
        powers = {0: HPoly.const(1)}
        for m, c in self._terms.items():
            e = m[index] if index < len(m) else 0
            if e not in powers:
                powers[e] = value ** e
            rest = list(m) + [0] * (index + 1 - len(m))
            rest[index] = 0
            out = out + HPoly({_norm(rest): c}) * powers[e]
        return out

    def shift_n(self, h: "HPoly") -> "HPoly":
        """p(n + h)."""
        return self.substitute(0, HPoly.n() + h)

    def at_n(self, value: "HPoly") -> "HPoly":
        """p evaluated with n replaced by ``value``."""
        return self.substitute(0, value)

    def evaluate(self, n: int, hs: Sequence[int] = ()) -> int:
        vals = [n] + list(hs)
        total = 0
        for m, c in self._terms.items():
            t = c
            for i, e in enumerate(m):
                if e:
                    if i >= len(vals):
                        raise ValueError(f"missing value for h{i}")
                    t *= vals[i] ** e
            total += t
        return total

    def __str__(self):
        return format_poly(self)

    def __repr__(self):
        return f"HPoly({format_poly(self)!r})"


def _mono_order(m: tuple) -> tuple:
    # n-degree first, then total h-degree, then exponents of h1, h2, ...
    e_n = m[0] if m else 0
    hs = m[1:]
    return (e_n, sum(hs), tuple(hs))


def _coerce(x) -> HPoly:
    if isinstance(x, HPoly):
        return x
    if isinstance(x, int):
        return HPoly.const(x)
    raise TypeError(f"cannot use {type(x).__name__} as a polynomial")


def _var_name(i: int) -> str:
    return "n" if i == 0 else f"h{i}"


def format_poly(p: HPoly) -> str:
    if p.is_zero():
        return "0"
    parts = []
    for m, c in p.canonical():
        factors = []
        for i, e in enumerate(m):
            if e == 1:
                factors.append(_var_name(i))
            elif e > 1:
                factors.append(f"{_var_name(i)}^{e}")
        mag = abs(c)
        if not factors:
            body = str(mag)
        elif mag == 1:
            body = "*".join(factors)
        else:
            body = "*".join([str(mag)] + factors)
        parts.append((c < 0, body))
    out = ("-" if parts[0][0] else "") + parts[0][1]
    for neg, body in parts[1:]:
        out += (" - " if neg else " + ") + body
    return out


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"\s*(?:(\d+)|(n|h\d+)|(.))")


class _Parser:
    """Recursive descent over + - * ^ ( ) with implicit multiplication."""

    def __init__(self, text: str):
        self.text = text
        self.toks = []
        for num, name, op in _TOKEN.findall(text):
            if num:
                self.toks.append(("num", int(num)))
            elif name:
                self.toks.append(("var", 0 if name == "n" else int(name[1:])))
            elif op.strip():
                if op not in "+-*^()":
                    raise ValueError(f"unexpected character {op!r} in {text!r}")
                self.toks.append(("op", op))
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self, op=None):
        tok = self.peek()
        if op is not None and tok != ("op", op):
            raise ValueError(f"expected {op!r} in {self.text!r}")
        self.i += 1
        return tok

    def parse_poly(self) -> HPoly:
        if not self.toks:
            raise ValueError("empty polynomial")
        p = self.expr()
        if self.i != len(self.toks):
            raise ValueError(f"trailing input in {self.text!r}")
        return p

    def expr(self):
        sign = 1
        if self.peek() in (("op", "+"), ("op", "-")):
            sign = -1 if self.take()[1] == "-" else 1
        out = self.term() * sign
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            t = self.term()
            out = out + t if op == "+" else out - t
        return out

    def term(self):
        out = self.power()
        while True:
            tok = self.peek()
            if tok == ("op", "*"):
                self.take()
                out = out * self.power()
            elif tok[0] in ("num", "var") or tok == ("op", "("):
                out = out * self.power()
            else:
                return out

    def power(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            kind, val = self.take()
            if kind != "num":
                raise ValueError(f"exponent must be a non-negative integer in {self.text!r}")
            base = base ** val
        return base

    def atom(self):
        kind, val = self.take()
        if kind == "num":
            return HPoly.const(val)
        if kind == "var":
            if val < 0:
                raise ValueError("bad variable")
            return HPoly.var(val)
        if (kind, val) == ("op", "("):
            p = self.expr()
            self.take(")")
            return p
        raise ValueError(f"unexpected token {val!r} in {self.text!r}")


# ---------------------------------------------------------------------------
# families

@dataclass(frozen=True)
class HPolyFamily:
    """Deduplicated family of nonzero polynomials, kept in canonical order."""

    members: tuple
    r: int = 0

    def __post_init__(self):
        uniq = {}
        for p in self.members:
            p = _coerce(p)
            if not p.is_zero():
                uniq.setdefault(p, p)
        ordered = tuple(sorted(uniq, key=HPoly.sort_key))
        object.__setattr__(self, "members", ordered)
        r = max([self.r] + [p.num_params() for p in ordered])
        object.__setattr__(self, "r", r)

    @classmethod
    def of(cls, members: Iterable, r: int = 0) -> "HPolyFamily":
        return cls(tuple(members), r)

    @classmethod
    def parse(cls, text: str) -> "HPolyFamily":
        text = text.strip()
        if not (text.startswith("{") and text.endswith("}")):
            raise ValueError("a family is written as {p1; p2; ...}")
        inner = text[1:-1].strip()
        parts = [s for s in (x.strip() for x in inner.split(";")) if s] if inner else []
        return cls.of(HPoly.parse(s) for s in parts)

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, p):
        return p in self.members

    def __str__(self):
        return "{" + "; ".join(format_poly(p) for p in self.members) + "}"

    def as_set(self) -> frozenset:
        return frozenset(self.members)


def family_type(fam: HPolyFamily) -> tuple:
    """(d, w_d, ..., w_1) with w_i the number of distinct leading coefficients in degree i."""
    if not len(fam):
        raise ValueError("the empty family has no type")
    d = max(p.n_degree() for p in fam)
    counts = []
    for i in range(d, 0, -1):
        counts.append(len({p.leading_coefficient() for p in fam if p.n_degree() == i}))
    return (d, *counts)


def _type_or_empty(fam: HPolyFamily) -> tuple:
    return family_type(fam) if len(fam) else ()


def type_lex_less(a: Sequence[int], b: Sequence[int]) -> bool:
    """Strict lexicographic order, degree first; the empty type is the least."""
    return tuple(a) < tuple(b)


def vdc_step(fam: HPolyFamily, p) -> HPolyFamily:
    """{p_i(n+h) - p_i(h) - p(n)} together with {p_i(n) - p(n)}, zeros and repeats removed.

    ``p`` is an index into the canonical member order or an explicit
    polynomial; h is the fresh parameter h_{r+1}.
    """
    if isinstance(p, int):
        if not 0 <= p < len(fam):
            raise IndexError(f"member index {p} out of range for a family of {len(fam)}")
        p = fam.members[p]
    return HPolyFamily(tuple(t[2] for t in vdc_step_terms(fam, p)), fam.r + 1)


def vdc_step_terms(fam: HPolyFamily, p) -> list:
    """Raw rewrite before cleaning: (q, kind, polynomial) with kind "shift" or "diff"."""
    p = _coerce(p)
    h = HPoly.h(fam.r + 1)
    out = []
    for q in fam:
        out.append((q, "shift", q.shift_n(h) - q.at_n(h) - p))
        out.append((q, "diff", q - p))
    return out


def rewrite_soundness(fam: HPolyFamily, p, rng, trials: int = 5, bound: int = 50) -> bool:
    """Check the rewrite pointwise at random integer (n, h) against its defining expressions."""
    if isinstance(p, int):
        p = fam.members[p]
    raw = vdc_step_terms(fam, p)
    new = vdc_step(fam, p)
    if {t[2] for t in raw if not t[2].is_zero()} != new.as_set():
        return False
    r = fam.r
    for _ in range(trials):
        n = rng.randint(-bound, bound)
        hs = [rng.randint(-bound, bound) for _ in range(r)]
        h = rng.randint(-bound, bound)
        for q, kind, poly in raw:
            if kind == "shift":
                want = q.evaluate(n + h, hs) - q.evaluate(h, hs) - p.evaluate(n, hs)
            else:
                want = q.evaluate(n, hs) - p.evaluate(n, hs)
            if poly.evaluate(n, hs + [h]) != want:
                return False
    return True


def random_family(rng, max_members: int = 4, max_degree: int = 3, coeff: int = 5) -> HPolyFamily:
    """Random family of integer polynomials in n with zero constant term.

    ``rng`` is a :class:`random.Random`; members have degree <= max_degree and
    coefficients in [-coeff, coeff] with a nonzero leading one.
    """
    k = rng.randint(1, max_members)
    members = set()
    while len(members) < k:
        d = rng.randint(1, max_degree)
        cs = [rng.randint(-coeff, coeff) for _ in range(d - 1)]
        cs.append(rng.choice([c for c in range(-coeff, coeff + 1) if c]))
        members.add(sum((c * HPoly.n() ** (i + 1) for i, c in enumerate(cs)), HPoly()))
    return HPolyFamily.of(members)


def choose_p(fam: HPolyFamily, rule: str = "leading") -> HPoly:
    """Earliest minimal-degree member in canonical order, or its leading term."""
    d = min(q.n_degree() for q in fam)
    first = next(q for q in fam if q.n_degree() == d)
    if rule == "leading":
        return first.leading_term()
    if rule == "member":
        return first
    raise ValueError(f"unknown rule {rule!r}")


@dataclass(frozen=True)
class PETStep:
    index: int
    p: HPoly
    family: HPolyFamily
    type: tuple


@dataclass
class PETTrace:
    start: HPolyFamily
    steps: list = field(default_factory=list)

    @property
    def types(self) -> list:
        return [_type_or_empty(self.start)] + [s.type for s in self.steps]

    def strictly_descending(self) -> bool:
        ts = self.types
        return all(type_lex_less(b, a) for a, b in zip(ts, ts[1:]))

    def format(self) -> str:
        lines = [f"0: {self.start}  type {_type_or_empty(self.start)}"]
        for s in self.steps:
            lines.append(f"{s.index}: p = {s.p} -> {s.family}  type {s.type}")
        return "\n".join(lines)


class PETGuardError(RuntimeError):
    """Raised when a run exceeds its step or size budget.

    ``min_total_steps`` is a certified lower bound on the length of the full
    run (see :func:`min_remaining_steps`).
    """

    def __init__(self, message: str, steps: int, family: HPolyFamily):
        super().__init__(message)
        self.steps = steps
        self.family = family
        self.min_total_steps = steps + min_remaining_steps(family)


def min_remaining_steps(fam: HPolyFamily) -> int:
    """Lower bound on the steps still needed: the number w_1 of linear classes.

    While linear members exist p is linear, say c n.  A linear member d n with
    d != c becomes (d - c) n in both halves of the rewrite, so distinct
    classes stay distinct and w_1 drops by at most one per step.
    """
    if not len(fam):
        return 0
    return len({q.leading_coefficient() for q in fam if q.n_degree() == 1})


def check_family(fam: HPolyFamily):
    for q in fam:
        if q.n_degree() < 1:
            raise ValueError(f"member {q} is constant in n")
        if not q.constant_term().is_zero():
            raise ValueError(f"member {q} has a nonzero constant term")


def pet_run(fam: HPolyFamily, rule: str = "leading", max_steps: int = 1000,
            max_members: int = 50000) -> PETTrace:
    """Apply vdc_step with the chosen p until the family is empty."""
    check_family(fam)
    trace = PETTrace(fam)
    cur = fam
    while len(cur):
        if len(trace.steps) >= max_steps:
            raise PETGuardError(f"no termination after {max_steps} steps", len(trace.steps), cur)
        p = choose_p(cur, rule)
        cur = vdc_step(cur, p)
        trace.steps.append(PETStep(len(trace.steps) + 1, p, cur, _type_or_empty(cur)))
        if len(cur) > max_members:
            raise PETGuardError(f"family grew to {len(cur)} members at step {len(trace.steps)}",
                                len(trace.steps), cur)
    return trace


def delta_iter(p: HPoly, r: int) -> HPoly:
    """Delta_{h_1..h_r} p with Delta_h a(n) = a(n+h) - a(n), in parameters after those of p."""
    if r < 0:
        raise ValueError("r must be non-negative")
    base = p.num_params()
    out = p
    for i in range(1, r + 1):
        out = out.shift_n(HPoly.h(base + i)) - out
    return out


def binomial_shift(d: int, h: HPoly) -> HPoly:
    """(n + h)^d expanded directly; an independent check of ``shift_n``."""
    out = HPoly()
    for k in range(d + 1):
        out = out + comb(d, k) * HPoly.n() ** k * h ** (d - k)
    return out
