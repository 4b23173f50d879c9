import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergolab.averaging import dyadic, sequence_exp_trace
from ergolab.systems import (
    CharacterFn,
    RotationSystem,
    SkewSystemT3,
    TorusPoint,
    golden_skew_system,
    iterate_R,
    l2_defect_exact,
    lflw_characters,
    lflw_reduction_check,
    multi_average,
    point_values,
    rotation_trace_matches,
)
from ergolab.torus import make_constant

SYS = golden_skew_system()
P = SYS.bits


def coords_strategy():
    return st.tuples(*[st.integers(0, (1 << P) - 1)] * 3)


class TestIterate:
    def test_identity(self):
        x = SYS.random_points(3, seed=1)
        for pt in x:
            assert iterate_R(SYS, pt, 0).same_as(pt)

    def test_origin(self):
        y = iterate_R(SYS, TorusPoint((0, 0, 0)), 1)
        fa = SYS.alpha.scaled(P) % (1 << P)
        fb = SYS.beta.scaled(P) % (1 << P)
        assert y.coords == (fa, fa, fb)
        a, b, c = y.to_floats()
        assert a == pytest.approx(0.6180339887, abs=1e-10) and c == pytest.approx(math.sqrt(2) - 1, abs=1e-12)

    @settings(max_examples=200)
    @given(coords_strategy(), st.integers(-50, 50), st.integers(-50, 50))
    def test_group_law(self, c, m, n):
        x = TorusPoint(c)
        assert iterate_R(SYS, iterate_R(SYS, x, m), n).same_as(iterate_R(SYS, x, m + n))

    def test_closed_form_matches_repeated_steps(self):
        x = SYS.random_points(1, seed=5)[0]
        y = x
        for _ in range(37):
            y = iterate_R(SYS, y, 1)
        assert y.same_as(iterate_R(SYS, x, 37))
        back = iterate_R(SYS, y, -37)
        assert back.same_as(x)

    def test_against_mpmath_orbit(self):
        mpmath.mp.prec = 300
        a = (1 + mpmath.sqrt(5)) / 2
        b = mpmath.sqrt(2)
        t = [mpmath.mpf(1) / 3, mpmath.mpf(2) / 7, mpmath.mpf(5) / 11]
        x = TorusPoint(tuple(int(Fraction(v) * (1 << P)) for v in (Fraction(1, 3), Fraction(2, 7), Fraction(5, 11))))
        for n in (1, 17, 1000, -250):
            y = iterate_R(SYS, x, n).to_floats()
            want = [mpmath.frac(t[0] + n * a), mpmath.frac(t[1] + 2 * n * t[0] + n * n * a), mpmath.frac(t[2] + n * b)]
            for got, w in zip(y, want):
                d = abs(got - float(w))
                assert min(d, 1 - d) < 1e-12

    def test_error_radius_grows(self):
        x = TorusPoint((0, 0, 0))
        assert iterate_R(SYS, x, 100).error_radius > iterate_R(SYS, x, 1).error_radius > 0

    def test_rejects_rational(self):
        with pytest.raises(ValueError):
            SkewSystemT3(make_constant("0.5", 192), make_constant("sqrt2", 192))


class TestCharacters:
    def test_modulus_and_integral(self):
        f = CharacterFn((1, -2, 3))
        for pt in SYS.random_points(5):
            assert abs(f(pt)) == pytest.approx(1.0)
        assert f.integral() == 0 and CharacterFn((0, 0, 0)).integral() == 1

    def test_point_values_match_orbits(self):
        f1, f2 = lflw_characters(3)
        s = [1, 4, 9, 33, 1000, 12345]
        for pt in SYS.random_points(4, seed=2):
            vals = point_values(SYS, s, [f1, f2], pt)
            direct = [f1(iterate_R(SYS, pt, sv)) * f2(iterate_R(SYS, pt, 2 * sv)) for sv in s]
            assert np.allclose(vals, direct, atol=1e-12)


class TestMultiAverage:
    def test_constant_one(self):
        res = multi_average(SYS, range(1, 200), 1, [CharacterFn((0, 0, 0))], n_points=4)
        for tr in res.traces:
            assert all(c.avg == 1 for c in tr.checkpoints)

    def test_function_count_mismatch(self):
        with pytest.raises(ValueError):
            multi_average(SYS, range(1, 10), 2, [CharacterFn((0, 0, 0))])
        with pytest.raises(ValueError):
            multi_average(SYS, range(1, 10), 1, [CharacterFn((0, 0))])

    def test_rotation_spectral_identity(self, S_2_20, alpha):
        s = S_2_20[:1 << 14]
        cps = dyadic(len(s))
        a, b = rotation_trace_matches(alpha, s, 3, cps)
        assert [c.partial_sum for c in a.checkpoints] == [c.partial_sum for c in b.checkpoints]
        # against the averaging path with beta = 3 alpha
        c = sequence_exp_trace(s, make_constant("3*golden_mean", 192), 1, cps)
        assert np.allclose([x.avg for x in a.checkpoints], [x.avg for x in c.checkpoints], atol=1e-12)

    def test_skew_convergence(self):
        f1, f2 = lflw_characters(1)
        res = multi_average(SYS, range(1, (1 << 16) + 1), 2, [f1, f2], n_points=64, seed=0,
                            checkpoints=dyadic(1 << 16))
        assert res.defects[1 << 15] <= 0.05
        assert res.exact_defects[1 << 15] == pytest.approx(res.defects[1 << 15], rel=1e-9, abs=1e-12)
        assert res.seed == 0
        assert res.to_csv().startswith("point_id,N,re_avg,im_avg\n")
        assert '"seed": 0' in res.to_json()

    def test_bad_exponent_transfer(self, S_2_20, alpha):
        rot = RotationSystem(alpha)
        s = S_2_20[:1 << 17].astype(np.int64)
        cps = dyadic(len(s))
        f = [CharacterFn((1,))]
        sq = multi_average(rot, s * s, 1, f, n_points=8, checkpoints=cps)
        lin = multi_average(rot, s, 1, f, n_points=8, checkpoints=cps)
        last = cps[-2]
        assert sq.defects[last] >= 0.02
        assert lin.defects[last] < sq.defects[last] / 5

    def test_exact_defect_rotation(self, alpha):
        rot = RotationSystem(alpha)
        s = list(range(1, 257))
        res = multi_average(rot, s, 1, [CharacterFn((1,))], n_points=16, checkpoints=dyadic(256))
        for N, d in res.defects.items():
            assert d == pytest.approx(l2_defect_exact(rot, s, [CharacterFn((1,))], N), abs=1e-12)


class TestReduction:
    def test_trivial_cases(self):
        pts = SYS.random_points(5)
        assert lflw_reduction_check(SYS, 4, [1], 1, pts)["max_discrepancy"] < 1e-15
        rep = lflw_reduction_check(SYS, 0, range(1, 50), 49, pts)
        assert rep["max_discrepancy"] == 0
        assert all(r["left"] == [1.0, 0.0] for r in rep["rows"])

    def test_identity_on_S(self, S_2_20):
        pts = SYS.random_points(100, seed=7)
        rep = lflw_reduction_check(SYS, 1, S_2_20, 10 ** 4, pts)
        assert rep["max_discrepancy"] <= 2 ** -40

    def test_short_sequence(self):
        with pytest.raises(ValueError):
            lflw_reduction_check(SYS, 1, [1, 2], 5, SYS.random_points(1))
