"""Tests for the exact-arithmetic plumbing and the bound formulas."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liarsearch.errors import DistributionError, DomainError
from liarsearch.numerics import (
    RADIUS_GROWTH_CONSTANT,
    RPRIME_GROWTH_CONSTANT,
    RPRIME_LINEAR_CONSTANT,
    Dyadic,
    ProbabilityVector,
    binom_leq,
    bounds_report,
    convergence_partial_sum,
    entropy,
    h2,
    h3,
    kl_divergence,
    kraft_sum,
    load_distribution,
    lower_bound,
    olog,
    radius_r,
    radius_rprime,
)

U2 = ProbabilityVector.uniform(2)
U4 = ProbabilityVector.uniform(4)
U8 = ProbabilityVector.uniform(8)
U16 = ProbabilityVector.uniform(16)
POINT = ProbabilityVector(["only"], [Fraction(1)])
HALF_QQ = ProbabilityVector.from_weights([Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)])


def rational_dist(min_n=2, max_n=8):
    return st.lists(st.integers(1, 50), min_size=min_n, max_size=max_n).map(
        lambda ws: ProbabilityVector.from_weights([Fraction(w) for w in ws]))


class TestOlog:
    def test_pins(self):
        assert olog(0) == 4.0
        assert olog(16) == 5.0
        assert olog(240) == 8.0

    def test_floor_and_monotone(self):
        xs = [0, 0.25, 1, 3, 10, 100, 1e6]
        vals = [olog(x) for x in xs]
        assert all(v >= 4.0 for v in vals)
        assert vals == sorted(vals)

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            olog(-0.5)


class TestEntropyFamily:
    def test_entropy_pins(self):
        assert entropy(U4) == pytest.approx(2.0, abs=1e-12)
        assert entropy(POINT) == pytest.approx(0.0, abs=1e-12)
        assert entropy(HALF_QQ) == pytest.approx(1.5, abs=1e-12)

    def test_h2_uniform16(self):
        # hand evaluation: log2(olog(16)) = log2(5)
        assert h2(U16) == pytest.approx(math.log2(5), abs=1e-12)

    def test_h2_point_mass(self):
        # log2(olog(1)) = log2(log2(17))
        assert h2(POINT) == pytest.approx(math.log2(math.log2(17)), abs=1e-12)

    def test_h3_uniform16(self):
        assert h3(U16) == pytest.approx(math.log2(math.log2(5)), abs=1e-12)

    @given(rational_dist())
    @settings(max_examples=50, deadline=None)
    def test_permutation_invariance(self, mu):
        pairs = sorted(zip(mu.labels, mu.probs), key=lambda t: str(t[1]))
        shuffled = ProbabilityVector([p[0] for p in pairs], [p[1] for p in pairs])
        for f in (entropy, h2, h3):
            assert f(shuffled) == pytest.approx(f(mu), abs=1e-9)

    def test_continuity_under_perturbation(self):
        eps = Fraction(1, 10 ** 9)
        for mu in (U8, HALF_QQ, U16):
            perturbed = ProbabilityVector.from_weights([p + eps for p in mu.probs])
            for f in (entropy, h2, h3):
                assert abs(f(perturbed) - f(mu)) < 1e-6


class TestLowerBound:
    def test_uniform8_k0(self):
        assert lower_bound(U8, 0) == pytest.approx(2.0, abs=1e-12)

    def test_uniform2_k1_clamped(self):
        # log2 log2 2 = 0, so 1 + 0 - 2 clamps to 0
        assert lower_bound(U2, 1, clamped=True) == 0.0
        assert lower_bound(U2, 1, clamped=False) == pytest.approx(-1.0, abs=1e-12)

    def test_uniform_2p16_k1(self):
        mu = ProbabilityVector.uniform(1 << 16)
        assert lower_bound(mu, 1) == pytest.approx(18.0, abs=1e-9)

    def test_point_mass_raw_mode_rejected(self):
        with pytest.raises(DomainError):
            lower_bound(POINT, 1, clamped=False)
        assert lower_bound(POINT, 1, clamped=True) == 0.0


class TestRadii:
    def test_r_pin(self):
        # direct evaluation of the clamped formula at d=1, k=1:
        # A = 2 ln^2 2 < 17, L = log2(A + 16) ~ 4.0841,
        # ceil(L + 8*(log2(L) + 4*log2(2/ln 2))) = 70
        assert radius_r(1, 1) == 70

    def test_r_monotone(self):
        for k in (1, 2, 3):
            vals = [radius_r(d, k) for d in range(1, 10001)]
            assert all(a <= b for a, b in zip(vals, vals[1:]))

    def test_r_floor_and_k0(self):
        assert radius_r(1, 5) >= 11
        assert radius_r(7, 0) == radius_r(7, 1)

    def test_r_growth_bound(self):
        # r(d) - log2(d+1) <= C' * (k log2 olog(d) + k log2 olog(k) + 1)
        for k in (1, 2, 3):
            for d in list(range(1, 2000)) + list(range(2000, 100001, 97)):
                lhs = radius_r(d, k) - math.log2(d + 1)
                rhs = RADIUS_GROWTH_CONSTANT * (
                    k * math.log2(olog(d)) + k * math.log2(olog(k)) + 1)
                assert lhs <= rhs, (d, k)

    def test_rprime_pin(self):
        assert radius_rprime(1, 1) == 24

    def test_rprime_monotone_and_k0(self):
        for k in (1, 2, 3):
            vals = [radius_rprime(j, k) for j in range(1, 5001)]
            assert all(a <= b for a, b in zip(vals, vals[1:]))
        assert radius_rprime(3, 0) == radius_rprime(3, 1)

    def test_rprime_self_inequality(self):
        # r'(j) >= log2 r'(j) + log2(2k(j+1) ln^2(j+1))
        for k in (1, 2, 3):
            for j in list(range(1, 2000)) + list(range(2000, 100001, 89)):
                r = radius_rprime(j, k)
                b = 2.0 * k * (j + 1) * math.log(j + 1) ** 2
                assert r >= math.log2(r) + math.log2(b), (j, k)

    def test_rprime_growth_bound(self):
        for k in (1, 2, 3):
            for j in list(range(1, 2000)) + list(range(2000, 100001, 89)):
                lhs = radius_rprime(j, k)
                rhs = math.log2(j) + RPRIME_GROWTH_CONSTANT * (
                    olog(k) + math.log2(olog(j)))
                assert lhs <= rhs, (j, k)

    def test_rprime_linear_bound(self):
        # r'(j) <= a*olog(j) + a for a = C'*olog(k): the depth-ceiling premise
        for k in (1, 2, 3):
            a = RPRIME_LINEAR_CONSTANT * olog(k)
            for j in list(range(1, 5000)) + [10 ** 5, 10 ** 6]:
                assert radius_rprime(j, k) <= a * olog(j) + a, (j, k)

    def test_log_fixpoint_inequality(self):
        # for a, b >= e, x = b + 4a(ln a + ln b) satisfies x >= a ln x + b
        grid = [math.e, 3.0, 5.0, 10.0, 50.0, 200.0, 1e4]
        for a in grid:
            for b in grid:
                x = b + 4 * a * (math.log(a) + math.log(b))
                assert x >= a * math.log(x) + b, (a, b)


class TestCombinatorics:
    def test_binom_leq_pins(self):
        assert binom_leq(4, 2) == 11
        assert binom_leq(7, 0) == 1
        assert binom_leq(5, 5) == 32

    def test_binom_leq_exponential_bound(self):
        for n in range(1, 65):
            for k in range(1, n + 1):
                assert binom_leq(n, k) <= math.e * n ** k

    def test_kraft_pins(self):
        assert kraft_sum([1, 2, 2]) == 1
        assert kraft_sum([1]) == Fraction(1, 2)
        assert kraft_sum([2, 2, 3, 3, 3]) == Fraction(7, 8)


class TestKL:
    def test_identity(self):
        assert kl_divergence(U8, U8) == 0.0

    def test_pin(self):
        eta = ProbabilityVector(["x1", "x2"], [Fraction(1, 4), Fraction(3, 4)])
        expected = 0.5 * math.log2(2) + 0.5 * math.log2(Fraction(2, 3))
        assert kl_divergence(U2, eta) == pytest.approx(expected, abs=1e-12)
        assert kl_divergence(U2, eta) == pytest.approx(0.2075, abs=1e-4)

    @given(rational_dist(min_n=3, max_n=6), rational_dist(min_n=3, max_n=6))
    @settings(max_examples=60, deadline=None)
    def test_nonnegative(self, mu, eta):
        if len(mu) != len(eta):
            return
        eta = ProbabilityVector(mu.labels, eta.probs)
        d = kl_divergence(mu, eta)
        if mu.probs == eta.probs:
            assert d == pytest.approx(0.0, abs=1e-12)
        else:
            assert d > 0

    def test_missing_support_rejected(self):
        eta = ProbabilityVector(["a", "b"], [Fraction(1, 2), Fraction(1, 2)])
        with pytest.raises(DomainError):
            kl_divergence(U2, eta)


class TestConvergence:
    def test_empty_sum(self):
        assert convergence_partial_sum(1, 0) == 0.0

    def test_tail_settles(self):
        s3 = convergence_partial_sum(1, 10 ** 3)
        s4 = convergence_partial_sum(1, 10 ** 4)
        s5 = convergence_partial_sum(1, 10 ** 5)
        assert abs(s4 - s3) < 1e-3
        assert abs(s5 - s4) < 1e-3
        assert s3 <= s4 <= s5

    def test_regression_pins(self):
        # frozen after first computation; the series is astronomically small
        # because the radii start at 70+
        assert convergence_partial_sum(1, 10 ** 5) == pytest.approx(
            1.0937458916720945e-17, rel=1e-9)
        assert convergence_partial_sum(2, 10 ** 5) == pytest.approx(
            1.6092292974602055e-33, rel=1e-9)
        assert convergence_partial_sum(2, 10 ** 5) <= 4.0
        assert convergence_partial_sum(3, 10 ** 5) == pytest.approx(
            5.9678216027358905e-52, rel=1e-9)
        assert convergence_partial_sum(3, 10 ** 5) <= 4.0


class TestDyadic:
    def test_normalization(self):
        d = Dyadic.of(4, 3)
        assert (d.mantissa, d.exponent) == (1, 1)
        assert d.as_fraction() == Fraction(1, 2)
        assert Dyadic.of(0, 7) == Dyadic(0, 0)

    def test_odd_mantissa_preserved(self):
        d = Dyadic.of(5, 4)
        assert (d.mantissa, d.exponent) == (5, 4)
        assert float(d) == 5 / 16


class TestProbabilityVector:
    def test_validation(self):
        with pytest.raises(DistributionError):
            ProbabilityVector(["a", "b"], [Fraction(1, 2), Fraction(1, 3)])
        with pytest.raises(DistributionError):
            ProbabilityVector(["a", "a"], [Fraction(1, 2), Fraction(1, 2)])
        with pytest.raises(DistributionError):
            ProbabilityVector(["a", "b"], [Fraction(0), Fraction(1)])

    def test_loader_rational_and_decimal(self):
        pv = load_distribution({
            "labels": ["a", "b", "c"],
            "probs": [{"num": "1", "den": "2"}, "0.25", {"num": "1", "den": "4"}],
        })
        assert pv.probs == (Fraction(1, 2), Fraction(1, 4), Fraction(1, 4))

    def test_loader_rejects_bad_sum(self):
        with pytest.raises(DistributionError):
            load_distribution({"labels": ["a", "b"], "probs": ["0.5", "0.4"]})
        with pytest.raises(DistributionError):
            load_distribution({"labels": ["a"], "probs": ["-1"]})

    def test_loader_file_roundtrip(self, tmp_path):
        path = tmp_path / "dist.json"
        path.write_text(
            '{"labels": ["a", "b"], "probs": [{"num": "1", "den": "2"}, "0.5"]}')
        pv = load_distribution(path)
        assert pv.labels == ("a", "b")


class TestBoundsReport:
    def test_lower_at_most_upper(self):
        for mu in (U2, U4, U8, U16, HALF_QQ):
            for k in (0, 1, 2, 3):
                rep = bounds_report(mu, k)
                assert rep.entropy >= 0
                assert rep.lower_bound <= rep.ub_algo2 + 1e-9

    def test_kl_field(self):
        eta = ProbabilityVector(U2.labels, [Fraction(1, 4), Fraction(3, 4)])
        rep = bounds_report(U2, 1, eta=eta)
        assert rep.kl_divergence == pytest.approx(0.2075, abs=1e-4)
        assert bounds_report(U2, 1).kl_divergence is None
