import random

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from ergolab.pet import (
    HPoly,
    HPolyFamily,
    PETGuardError,
    binomial_shift,
    delta_iter,
    family_type,
    format_poly,
    min_remaining_steps,
    pet_run,
    random_family,
    rewrite_soundness,
    type_lex_less,
    vdc_step,
)

n_sym = sympy.Symbol("n")


def to_sympy(p: HPoly):
    return sympy.expand(sympy.sympify(format_poly(p).replace("^", "**")))


def hs(k):
    return sympy.symbols(" ".join(f"h{i}" for i in range(1, k + 1)), seq=True)


def fam(text):
    return HPolyFamily.parse(text)


# integer polynomials in n (and a couple of h's) with zero constant term
coeffs = st.lists(st.integers(-5, 5), min_size=1, max_size=4).filter(lambda c: any(c))


def poly_from(cs):
    return sum((c * HPoly.n() ** (i + 1) for i, c in enumerate(cs)), HPoly())


class TestHPoly:
    def test_parse_format_round_trip(self):
        for text in ["n^2 + 4*n*h1", "-3*n^3*h2^2 + n", "2*n*h1 + h1^2", "0"]:
            p = HPoly.parse(text)
            assert HPoly.parse(str(p)) == p
        assert str(HPoly.parse("4 n h1 + n n")) == "n^2 + 4*n*h1"

    def test_parse_errors(self):
        for bad in ["n^", "x + 1", "(n", "n^-1"]:
            with pytest.raises(ValueError):
                HPoly.parse(bad)

    def test_canonical_unique(self):
        a = HPoly.parse("(n + h1)^2 - h1^2")
        b = HPoly.parse("2*n*h1 + n^2")
        assert a == b and hash(a) == hash(b) and a.canonical() == b.canonical()

    @settings(max_examples=100, deadline=None)
    @given(coeffs, coeffs)
    def test_arithmetic_against_sympy(self, a, b):
        p, q = poly_from(a), poly_from(b)
        h1 = HPoly.h(1)
        for got, want in [(p + q, to_sympy(p) + to_sympy(q)),
                          (p * q, to_sympy(p) * to_sympy(q)),
                          (p.shift_n(h1), to_sympy(p).subs(n_sym, n_sym + sympy.Symbol("h1"))),
                          (p ** 2, to_sympy(p) ** 2)]:
            assert sympy.expand(to_sympy(got) - want) == 0

    def test_binomial_shift(self):
        h = HPoly.h(1)
        for d in range(6):
            assert binomial_shift(d, h) == (HPoly.n() ** d).shift_n(h)

    def test_evaluate(self):
        p = HPoly.parse("n^2 + 4*n*h1 - h2")
        assert p.evaluate(3, [2, 5]) == 9 + 24 - 5
        assert p.n_degree() == 2 and p.num_params() == 2
        assert HPoly().n_degree() == -1


class TestType:
    def test_paper_examples(self):
        assert family_type(fam("{n; 2*n}")) == (1, 2)
        assert family_type(fam("{n^2; 2*n^2}")) == (2, 2, 0)
        f = fam("{n^2 + 2*n*(h1 + h2); n^2 + 2*n*(h2 - h1); n^2 + 2*n*h1; n^2 - 2*n*h1}")
        assert family_type(f) == (2, 1, 0)

    def test_empty(self):
        with pytest.raises(ValueError):
            family_type(HPolyFamily(()))

    def test_lex(self):
        assert type_lex_less((1, 1), (1, 2))
        assert type_lex_less((2, 1, 0), (2, 2, 0))
        assert type_lex_less((1, 8), (2, 1, 0))
        assert not type_lex_less((1, 2), (1, 2))
        assert type_lex_less((), (1, 1))

    def test_family_invariants(self):
        f = HPolyFamily.of([HPoly.parse("n"), HPoly.parse("n"), HPoly(), HPoly.parse("2*n")])
        assert len(f) == 2


class TestVdcStep:
    def test_ex1(self):
        assert vdc_step(fam("{n; 2*n}"), HPoly.parse("n")).as_set() == fam("{n}").as_set()

    def test_quadratic(self):
        got = vdc_step(fam("{n^2; 2*n^2}"), HPoly.parse("n^2"))
        assert got.as_set() == fam("{2*n*h1; n^2 + 4*n*h1; n^2}").as_set()
        assert got.r == 1

    def test_single_linear(self):
        assert len(vdc_step(fam("{n}"), 0)) == 0

    def test_bad_index(self):
        with pytest.raises(IndexError):
            vdc_step(fam("{n}"), 3)

    def test_against_sympy(self):
        rng = random.Random(8)
        h = sympy.Symbol("h1")
        for _ in range(30):
            f = random_family(rng, max_degree=3)
            p = f.members[0]
            P = to_sympy(p)
            want = set()
            for q in f:
                Q = to_sympy(q)
                for expr in (Q.subs(n_sym, n_sym + h) - Q.subs(n_sym, h) - P, Q - P):
                    expr = sympy.expand(expr)
                    if expr != 0:
                        want.add(expr)
            got = {to_sympy(x) for x in vdc_step(f, 0)}
            assert got == want

    def test_soundness_random(self):
        rng = random.Random(1)
        for _ in range(100):
            f = random_family(rng)
            p = rng.randrange(len(f))
            assert rewrite_soundness(f, p, rng)
            # second generation carries an h-parameter
            g = vdc_step(f, p)
            if len(g) and len(g) < 200:
                assert rewrite_soundness(g, 0, rng)


class TestRun:
    def test_ex1(self):
        tr = pet_run(fam("{n; 2*n}"))
        assert len(tr.steps) == 2 and tr.types == [(1, 2), (1, 1), ()]

    def test_single(self):
        assert len(pet_run(fam("{n}")).steps) == 1

    def test_quadratic_example(self):
        tr = pet_run(fam("{n^2; 2*n^2}"))
        s = tr.steps
        assert s[0].family.as_set() == fam("{2*n*h1; n^2 + 4*n*h1; n^2}").as_set()
        assert s[1].type == (2, 1, 0)
        assert s[2].type[0] == 1 and s[2].type <= (1, 8)
        assert tr.strictly_descending()
        assert len(tr.steps) == 3 + s[2].type[1]
        assert "type (2, 2, 0)" in tr.format()

    def test_p2_members_match(self):
        tr = pet_run(fam("{n^2; 2*n^2}"))
        want = fam("{n^2 + 2*n*(h1 + h2); n^2 + 2*n*(h2 - h1); n^2 + 2*n*h1; n^2 - 2*n*h1}")
        assert tr.steps[1].family.as_set() == want.as_set()

    def test_descent_on_random_families(self):
        rng = random.Random(3)
        done = 0
        for _ in range(30):
            f = random_family(rng, max_degree=2)
            try:
                tr = pet_run(f, max_members=400)
            except PETGuardError:
                continue
            done += 1
            assert tr.strictly_descending()
        assert done >= 12

    def test_rejects_constant_term(self):
        with pytest.raises(ValueError):
            pet_run(fam("{n + 1}"))

    def test_guard_certificate(self):
        f = fam("{-4*n; -5*n^2 + 4*n; n^2 - 5*n; -2*n^3 - n^2 + 2*n}")
        with pytest.raises(PETGuardError) as info:
            pet_run(f, max_members=2000)
        assert info.value.min_total_steps >= info.value.steps
        assert min_remaining_steps(fam("{n; 2*n; 3*n; n^2}")) == 3

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 4), st.integers(-4, 4).filter(bool))
    def test_lower_bound_is_sound(self, k, c):
        # k distinct linear classes need at least k steps
        f = HPolyFamily.of([HPoly.parse(f"{c * i}*n") for i in range(1, k + 1)])
        assert len(pet_run(f).steps) >= min_remaining_steps(f) == k


class TestDelta:
    def test_square(self):
        assert delta_iter(HPoly.parse("n^2"), 1) == HPoly.parse("2*n*h1 + h1^2")

    def test_multiple_term(self):
        d = delta_iter(HPoly.parse("n^2 + n"), 1)
        assert d == HPoly.parse("2*n*h1 + h1^2 + h1") and d.n_degree() == 1

    @pytest.mark.parametrize("l,d", [(2, 1), (2, 2), (3, 1)])
    def test_linear_after_ld_minus_one(self, l, d):
        p = HPoly.n() ** (l * d) + HPoly.n() ** d
        out = delta_iter(p, l * d - 1)
        assert out.n_degree() == 1
        # sympy oracle for the iterated difference
        expr = to_sympy(p)
        for i, h in enumerate(hs(l * d - 1)):
            expr = sympy.expand(expr.subs(n_sym, n_sym + h) - expr)
        assert sympy.expand(to_sympy(out) - expr) == 0

    @settings(max_examples=60, deadline=None)
    @given(coeffs, st.integers(0, 6))
    def test_degree_law(self, cs, r):
        p = poly_from(cs)
        deg = p.n_degree()
        out = delta_iter(p, r)
        if r < deg:
            assert out.n_degree() == deg - r
        elif r == deg:
            assert out.n_degree() <= 0
        else:
            assert out.is_zero()

    def test_negative_r(self):
        with pytest.raises(ValueError):
            delta_iter(HPoly.n(), -1)
