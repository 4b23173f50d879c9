import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergolab.expsums import (
    ThresholdNotFoundError,
    bad_approximation_check,
    bsg_slopes,
    bsg_threshold,
    check_bsg,
    check_gsb,
    coefficient_grid,
    fibonacci,
    golden_distance_ok,
    gsb_base_case,
    gsb_constant,
    linear_sum_closed_form,
    pkey_threshold_scan,
    polynomial_samples,
    scan_to_csv,
    vdc_check,
    vdc_sides,
    weyl_sum,
)
from ergolab.sequences import default_beta_grid
from ergolab.torus import e, frac_phases, make_constant


def naive_vdc(v, H):
    N = len(v)
    lhs = abs(sum(v) / N) ** 2
    rhs = 2 / H + 4 / H * sum(abs(sum(v[n + h] * np.conj(v[n]) for n in range(N - h)) / N)
                              for h in range(1, H))
    return lhs, rhs


class TestVdc:
    def test_constant(self):
        lhs, rhs, ok = vdc_check(np.ones(50), 1)
        assert lhs == 1 and rhs == 2 and ok

    def test_golden(self, alpha):
        v = e(frac_phases(np.arange(1, 1001), alpha))
        assert vdc_check(v, 10)[2]

    def test_against_naive_loop(self):
        rng = np.random.default_rng(4)
        v = np.exp(2j * np.pi * rng.random(60))
        for H in (1, 3, 17, 60):
            got = vdc_sides(v, H)
            want = naive_vdc(v, H)
            assert got == pytest.approx(want, rel=1e-12)

    def test_random_instances(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            N = int(rng.integers(1, 1001))
            H = int(rng.integers(1, N + 1))
            v = np.exp(2j * np.pi * rng.random(N))
            assert vdc_check(v, H)[2]

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 200), st.integers(1, 4), st.integers(0, 2 ** 31), st.floats(0, 1))
    def test_vectors(self, N, d, seed, shrink):
        rng = np.random.default_rng(seed)
        v = rng.normal(size=(N, d)) + 1j * rng.normal(size=(N, d))
        v *= shrink / np.maximum(np.linalg.norm(v, axis=1, keepdims=True), 1e-300)
        H = int(rng.integers(1, N + 1))
        assert vdc_check(v, H)[2]

    def test_range_errors(self):
        with pytest.raises(ValueError):
            vdc_sides(np.ones(5), 6)
        with pytest.raises(ValueError):
            vdc_sides(np.ones(5), 0)
        with pytest.raises(ValueError):
            vdc_sides(2 * np.ones(5), 2)


class TestGsb:
    def test_constants(self):
        assert gsb_constant(1) == 1.5
        assert gsb_constant(2) == pytest.approx(2 * math.sqrt(3))
        C, vals = 1.5, [1.5]
        for b in range(1, 8):
            C = 2 * ((b + 1) ** (2 ** (1 - b)) * C) ** 0.5
            vals.append(C)
        assert [gsb_constant(b) for b in range(1, 9)] == pytest.approx(vals)
        assert all(v < 6 for v in vals)
        assert gsb_constant(2, strict=True) == pytest.approx(math.sqrt(24))

    def test_rejects(self):
        with pytest.raises(ValueError):
            gsb_constant(0)
        with pytest.raises(ValueError):
            check_gsb(0, 100, 2)

    def test_weyl_sum_against_mpmath(self, alpha):
        mpmath.mp.prec = 200
        a = (1 + mpmath.sqrt(5)) / 2
        c = make_constant("1/7")
        want = sum(mpmath.expjpi(2 * mpmath.frac(3 * n ** 2 * a + mpmath.mpf(n) / 7)) for n in range(1, 301))
        got = weyl_sum(3, 300, 2, [c], alpha)
        assert abs(got - complex(want)) < 1e-10

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 200), st.integers(1, 5000))
    def test_closed_form_vs_direct(self, m, N):
        direct = abs(weyl_sum(m, N, 1))
        assert direct == pytest.approx(linear_sum_closed_form(m, N), abs=1e-8)
        assert direct <= 1.5 * m

    def test_base_case_small(self):
        rep = gsb_base_case(40, 20000)
        assert rep["holds"] and rep["max_ratio"] < 1

    def test_samples(self):
        assert polynomial_samples(1) == [()]
        assert len(polynomial_samples(2)) == 64
        assert len(coefficient_grid()) == 32
        s3 = polynomial_samples(3)
        assert all(len(t) == 2 for t in s3)

    def test_b2_ratios(self):
        rep = check_gsb(1, 1 << 14, 2)
        assert rep["samples"] == 64 and rep["holds"] and rep["max_ratio"] <= 1


class TestBadApproximation:
    def test_fibonacci(self):
        assert [fibonacci(k) for k in range(1, 11)] == [1, 1, 2, 3, 5, 8, 13, 21, 34, 55]

    def test_exact_against_mpmath(self):
        mpmath.mp.prec = 500
        a = (1 + mpmath.sqrt(5)) / 2
        qs = list(range(1, 300)) + [fibonacci(k) for k in range(10, 81)]
        for q in qs:
            x = q * a
            d = min(x - mpmath.floor(x), mpmath.ceil(x) - x)
            assert golden_distance_ok(q) == bool(d >= mpmath.mpf(1) / (3 * q))

    def test_full_check(self):
        rep = bad_approximation_check()
        assert rep["holds"] and rep["max_q"] == fibonacci(80)


class TestBsg:
    def test_threshold_value(self):
        assert bsg_threshold(2, 0.05) == pytest.approx(1.05 - 2 ** -5)

    def test_zero_beta_reduces_to_base_case(self):
        zero = make_constant("0", 128)
        rep = check_bsg(1, 1, 2, 1 << 12, beta_grid=[zero])
        assert rep["rows"][0]["abs_sum"] <= 1.5
        assert rep["rows"][0]["case"] == 2

    def test_rational_small_denominator_is_case_2(self):
        # N**gamma = 2 at N = 2**16, g = 2
        rep = check_bsg(1, 1, 2, 1 << 16, beta_grid=[make_constant("1/2"), make_constant("1/3")])
        assert [r["s"] for r in rep["rows"]] == [2, 3]
        assert [r["case"] for r in rep["rows"]] == [2, 1]

    def test_irrational_is_case_1(self):
        rep = check_bsg(1, 1, 2, 1 << 12, beta_grid=[make_constant("sqrt2", 192)])
        assert rep["rows"][0]["case"] == 1

    def test_default_box(self):
        for N in (1 << 12, 1 << 14):
            rep = check_bsg(1, 1, 2, N)
            assert rep["holds"] and rep["max_exponent"] <= 1 + 0.05 - 2 ** -5

    def test_preconditions(self):
        with pytest.raises(ValueError):
            check_bsg(1, 2, 2, 1 << 12)
        with pytest.raises(ValueError):
            check_bsg(5, 1, 2, 1 << 12)

    def test_slopes(self):
        sl = bsg_slopes(1, 1, 2, [1 << 10, 1 << 12], beta_grid=default_beta_grid()[:3])
        assert len(sl) == 3 and all(math.isfinite(x) for x in sl.values())


class TestPkey:
    def test_b2_g1(self):
        rep = pkey_threshold_scan(2, 1, 1, [1 << k for k in range(6, 15)])
        assert rep["N0"] <= 1 << 12
        assert all(r["holds"] for r in rep["rows"] if r["N"] >= rep["N0"])
        assert scan_to_csv(rep).startswith("N,sup_abs_sum,bound\n")

    def test_b1_g2(self):
        rep = pkey_threshold_scan(1, 2, 1, [1 << k for k in range(6, 15)])
        assert rep["N0"] <= 1 << 14

    def test_equal_rejected(self):
        with pytest.raises(ValueError):
            pkey_threshold_scan(2, 2, 1, [1024])

    def test_not_found(self):
        # beta = 0 with g = 1 and b = 1, m chosen so m alpha is near an integer keeps the sum large
        with pytest.raises(ThresholdNotFoundError):
            pkey_threshold_scan(2, 1, 1, [4, 8], beta_grid=[make_constant("0", 128)],
                                alpha=make_constant("0", 128))
