from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import golden_fraction
from ergolab.sequences import (
    INTERVALS,
    ONE_MINUS,
    ONE_PLUS,
    PHI0,
    PSI0,
    ExponentSchedule,
    JNotFoundError,
    Region,
    SequenceVariant,
    TrigPoly,
    alternating_weight,
    alternating_weights,
    block_of,
    build_schedule,
    classify_interval,
    default_beta_grid,
    default_schedule,
    enumerate_S,
    estimate_J,
    first_terms,
    indicator_S,
    iter_S,
    member,
)
from ergolab.torus import TorusValue, make_constant

MULTI2 = SequenceVariant("multiple", 2)


def oracle_region(x: Fraction) -> Region:
    x = x % 1
    if x <= Fraction(1, 8) or x >= Fraction(7, 8):
        return Region.PLUS
    if Fraction(3, 8) <= x <= Fraction(5, 8):
        return Region.MINUS
    return Region.NEITHER


def oracle_member(n, b_of_j, mult=lambda n, b: n ** b):
    L = n.bit_length()
    j, first = L // 2, L % 2 == 0
    m = mult(n, b_of_j(j))
    phase = (m * golden_fraction(m.bit_length() + 96)) % 1
    return oracle_region(phase) == (Region.PLUS if first else Region.MINUS)


class TestIntervals:
    def test_lengths(self):
        assert INTERVALS.exact_region(Fraction(1, 8)) == Region.PLUS
        assert INTERVALS.exact_region(Fraction(7, 8)) == Region.PLUS
        assert INTERVALS.exact_region(Fraction(3, 8)) == Region.MINUS
        assert INTERVALS.exact_region(Fraction(5, 8)) == Region.MINUS

    @pytest.mark.parametrize("x,want", [(Fraction(0), Region.PLUS), (Fraction(1, 2), Region.MINUS),
                                        (Fraction(1, 4), Region.NEITHER)])
    def test_examples(self, x, want):
        assert classify_interval(TorusValue.from_fraction(x)) == want

    @settings(max_examples=300)
    @given(st.fractions(min_value=0, max_value=1).filter(lambda x: x < 1))
    def test_matches_oracle(self, x):
        assert classify_interval(TorusValue.from_fraction(x)) == oracle_region(x)


class TestMember:
    def test_n2_n3(self, sched2, alpha):
        assert not member(2, sched2, alpha)
        assert not member(3, sched2, alpha)
        assert float((4 * golden_fraction(100)) % 1) == pytest.approx(0.4721, abs=1e-4)
        assert float((9 * golden_fraction(100)) % 1) == pytest.approx(0.5623, abs=1e-4)

    def test_phase_zero_is_in(self):
        zero = make_constant("0", 128)
        assert member(2, ExponentSchedule.constant(2), zero)
        assert not member(4, ExponentSchedule.constant(2), zero)

    def test_n1_rejected(self, sched2, alpha):
        with pytest.raises(ValueError):
            member(1, sched2, alpha)
        with pytest.raises(ValueError):
            block_of(1)

    def test_against_oracle(self, sched23, alpha):
        rng = np.random.default_rng(1)
        for n in [2, 3, 7, 8, 100] + rng.integers(2, 1 << 24, 150).tolist():
            assert member(int(n), sched23, alpha) == oracle_member(int(n), sched23.exponent)

    def test_multiple_against_oracle(self, alpha):
        sched = ExponentSchedule.constant(2, MULTI2)
        for n in range(2, 400):
            assert member(n, sched, alpha) == oracle_member(n, lambda j: 2, lambda n, b: n ** (2 * b) + n ** b)

    def test_pointwise_requires_golden(self):
        sched = ExponentSchedule.constant(2, SequenceVariant("pointwise"))
        with pytest.raises(ValueError):
            member(5, sched, make_constant("sqrt2", 128))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 1 << 30), st.sampled_from([1, 2, 3, 4]))
    def test_precision_invariance(self, n, b):
        sched = ExponentSchedule.constant(b)
        lo = make_constant("golden_mean", 128)
        hi = make_constant("golden_mean", 1024)
        assert member(n, sched, lo) == member(n, sched, hi)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 1 << 20), st.integers(1, 12))
    def test_schedule_locality(self, n, k):
        # for constant schedules membership depends only on n and b
        alpha = make_constant("golden_mean", 256)
        a = ExponentSchedule.constant(3)
        b = ExponentSchedule({j: 3 for j in range(1, k + 1)}, (3,))
        assert member(n, a, alpha) == member(n, b, alpha)


class TestEnumerate:
    def test_empty(self, sched2, alpha):
        assert len(enumerate_S(sched2, alpha, 1)) == 0

    def test_density(self, sched2, alpha):
        S = enumerate_S(sched2, alpha, 1 << 18)
        assert 0.23 <= len(S) / (1 << 18) <= 0.27
        assert abs(len(S) / (1 << 18) - 0.25) <= 0.02

    def test_increasing_and_members(self, S_2_20, sched2, alpha):
        assert np.all(np.diff(S_2_20) > 0)
        rng = np.random.default_rng(0)
        for s in rng.choice(S_2_20, 200):
            assert member(int(s), sched2, alpha)

    def test_exhaustive_small(self, sched23, alpha):
        S = set(enumerate_S(sched23, alpha, 5000).tolist())
        assert S == {n for n in range(2, 5001) if member(n, sched23, alpha)}

    def test_streaming_agrees(self, sched23, alpha):
        S = enumerate_S(sched23, alpha, 20000)
        assert list(iter_S(sched23, alpha, 20000)) == S.tolist()
        assert first_terms(sched23, alpha, 50).tolist() == S[:50].tolist()

    def test_indicator(self, sched2, alpha):
        ind = indicator_S(sched2, alpha, 3000)
        S = enumerate_S(sched2, alpha, 3000)
        assert np.flatnonzero(ind).tolist() == (S - 1).tolist()

    def test_multiple_variant(self, alpha):
        sched = ExponentSchedule.constant(2, MULTI2)
        S = enumerate_S(sched, alpha, 3000)
        assert S.tolist() == [n for n in range(2, 3001) if member(n, sched, alpha)]


class TestWeights:
    def test_indicator_pair_is_membership(self, sched23, alpha):
        w = alternating_weights(sched23, alpha, 10 ** 4, ONE_PLUS, ONE_MINUS)
        ind = indicator_S(sched23, alpha, 10 ** 4)
        assert np.array_equal(w.real, ind.astype(float)) and not w.imag.any()

    def test_pointwise_single(self, sched23, alpha):
        for n in (2, 9, 77, 1023, 4096):
            assert alternating_weight(n, sched23, alpha, ONE_PLUS, ONE_MINUS) == float(member(n, sched23, alpha))

    def test_constant_one(self, sched2, alpha):
        w = alternating_weights(sched2, alpha, 500, 1, 1)
        assert np.all(w[1:] == 1)

    def test_phi0_at_phase_zero(self):
        zero = make_constant("0", 128)
        assert alternating_weight(2, ExponentSchedule.constant(2), zero, PHI0, PSI0) == 0.75

    def test_trig_weight(self, sched2, alpha):
        phi = TrigPoly({1: 1.0})
        w = alternating_weights(sched2, alpha, 100, phi, phi)
        want = np.exp(2j * np.pi * float(golden_fraction(80) * 49 % 1))
        assert w[6] == pytest.approx(want, abs=1e-12)
        assert phi.zero_integral and not TrigPoly({0: 1.0}).zero_integral


class TestSchedules:
    def test_single_element(self):
        s = build_schedule([2], J_max=12)
        assert all(s.exponent(j) == 2 for j in range(1, 13))
        s5 = build_schedule([5], MULTI2)
        assert s5.exponent(7) == 5 and s5.variant == MULTI2

    def test_estimate_J_examples(self, alpha):
        j = estimate_J(2, 1, 0.5, 1 << 16, alpha)
        assert j <= 8
        # a larger horizon can only push the certified index up
        assert estimate_J(2, 1, 0.5, 1 << 17, alpha) >= j
        assert estimate_J(2, 1, 2.0, 1 << 10, alpha) == 1
        with pytest.raises(JNotFoundError):
            estimate_J(1, 1, 1e-9, 1 << 12, alpha)

    def test_bad_horizon(self, alpha):
        with pytest.raises(ValueError):
            estimate_J(2, 1, 0.5, 1000, alpha)

    def test_recurrence_transcription(self, sched23, alpha):
        # J_t = max(J(a_t, t, 1/t), J_{t-1} + t) with blocks a_t, ..., a_1 from J_t on
        B = [2, 3]
        want, J_prev, t = {}, None, 1
        while True:
            lead = min(t, len(B))
            J_est = estimate_J(B[lead - 1], t, 1 / t, 1 << 14, alpha)
            J_t = J_est if J_prev is None else max(J_est, J_prev + t)
            if J_t > 12:
                break
            for i in range(lead):
                if J_t + i <= 12:
                    want[J_t + i] = B[lead - 1 - i]
            J_prev, t = J_t, t + 1
        assert dict(sched23.entries) == want
        first3 = min(j for j, b in want.items() if b == 3)
        assert first3 == max(estimate_J(3, 2, 0.5, 1 << 14, alpha), sched23.horizons["J_1"] + 2)

    def test_every_element_recurs(self, sched23):
        vals = list(sched23.entries.values())
        assert set(vals) <= {2, 3}
        assert vals.count(2) >= 2 and vals.count(3) >= 2

    def test_json_round_trip(self, sched23):
        back = ExponentSchedule.from_json(sched23.to_json())
        assert back == sched23
        assert back.exponent(5) == 2

    def test_shipped_schedule_matches_fresh_build(self, sched23):
        assert default_schedule([2, 3]).entries == sched23.entries

    def test_beta_grid(self):
        grid = default_beta_grid()
        assert len(grid) == 37
        assert float(grid[0]) == 0.0
