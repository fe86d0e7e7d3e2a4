import math

import numpy as np
import pytest

from lecam.densities import cosine, uniform
from lecam.equivalence import (
    ChainBound,
    RateParams,
    bound_carter_independent,
    bound_carter_multinomial,
    bound_density_reconstruction,
    bound_gaussian_link,
    choose_m,
    minimize_total,
    target_rate,
    total_bound,
    total_bound_curve,
)
from lecam.errors import DomainError

COSINE = cosine([0.3])


class TestReconstructionRate:
    def test_vanishes_for_large_m(self):
        p = RateParams(n=1, m=10**6, gamma=1.0)
        assert bound_density_reconstruction(p) < 2e-9

    def test_dominant_exponent_at_gamma_one(self):
        # at gamma = 1 the m^{-3/2} term dominates: doubling m divides by ~2^1.5
        big, bigger = 2**12, 2**13
        r1 = bound_density_reconstruction(RateParams(n=4, m=big, gamma=1.0))
        r2 = bound_density_reconstruction(RateParams(n=4, m=bigger, gamma=1.0))
        assert r1 / r2 == pytest.approx(2**1.5, rel=2e-2)

    def test_terms_equal_at_gamma_half(self):
        p = RateParams(n=9, m=100, gamma=0.5)
        assert bound_density_reconstruction(p) == pytest.approx(
            3.0 * 2.0 * 100**-1.5, rel=1e-12
        )

    def test_tuned_substitution(self):
        # at n = m^(2+gamma) the bound equals m^{(2+gamma)/2} (m^-1.5 + m^-(1+gamma))
        for m, gamma in ((16, 1.0), (27, 0.5)):
            n = int(round(m ** (2.0 + gamma)))
            p = RateParams(n=n, m=m, gamma=gamma)
            expect = math.sqrt(n) * (m**-1.5 + m ** -(1.0 + gamma))
            assert bound_density_reconstruction(p) == pytest.approx(expect, rel=1e-12)


class TestCarterRates:
    def test_multinomial_values(self):
        assert bound_carter_multinomial(RateParams(4, 2, 1.0)) == pytest.approx(
            math.log(2.0), abs=1e-15
        )

    def test_real_valued_m(self):
        # the formula itself accepts fractional bin counts: m = e gives C_R e / sqrt(n)
        assert bound_carter_multinomial(RateParams(16, math.e, 1.0)) == pytest.approx(
            math.e / 4.0, rel=1e-12
        )

    def test_quadrupling_n_halves(self):
        a = bound_carter_multinomial(RateParams(100, 8, 1.0))
        b = bound_carter_multinomial(RateParams(400, 8, 1.0))
        assert a == pytest.approx(2.0 * b, rel=1e-12)

    def test_independent_values(self):
        assert bound_carter_independent(RateParams(4, 2, 1.0)) == 1.0
        assert bound_carter_independent(RateParams(4, 4, 1.0)) == 2.0
        # n = m^2 gives exactly C_R
        assert bound_carter_independent(
            RateParams(64, 8, 1.0, C_R=2.5)
        ) == pytest.approx(2.5)

    def test_constant_scales(self):
        a = bound_carter_multinomial(RateParams(100, 8, 1.0, C_R=1.0))
        b = bound_carter_multinomial(RateParams(100, 8, 1.0, C_R=3.0))
        assert b == pytest.approx(3.0 * a, rel=1e-12)

    def test_param_guards(self):
        with pytest.raises(DomainError):
            RateParams(0, 4, 1.0)
        with pytest.raises(DomainError):
            RateParams(4, 1, 1.0)
        with pytest.raises(DomainError):
            RateParams(4, 4, 1.5)
        with pytest.raises(DomainError):
            RateParams(4, 4, 1.0, C_R=0.0)


class TestGaussianLink:
    def test_uniform_vanishes(self):
        p = RateParams(n=100, m=8, gamma=1.0)
        assert bound_gaussian_link(p, uniform()) <= 1e-10

    def test_scales_as_sqrt_n(self):
        a = bound_gaussian_link(RateParams(n=100, m=8, gamma=1.0), COSINE)
        b = bound_gaussian_link(RateParams(n=400, m=8, gamma=1.0), COSINE)
        assert b == pytest.approx(2.0 * a, rel=1e-9)

    def test_measured_slope_in_m(self):
        # the computable formula is a Jensen gap driven by (f')^2 / m^2, so it
        # decays at slope ~ -2 for every class density with bounded derivative;
        # that is steeper than (consistent with) the advertised
        # O(sqrt n (m^{-1-gamma} + m^{-3/2})) envelope
        ms = np.array([8, 16, 32, 64, 128])
        vals = np.array(
            [bound_gaussian_link(RateParams(1000, int(m), 1.0), COSINE) for m in ms]
        )
        slope = np.polyfit(np.log(ms), np.log(vals), 1)[0]
        assert slope == pytest.approx(-2.0, abs=0.3)
        envelope = np.array(
            [
                bound_density_reconstruction(RateParams(1000, int(m), 1.0))
                for m in ms
            ]
        )
        assert (vals <= envelope).all()


class TestChooseM:
    def test_spec_values(self):
        assert choose_m(1024, 1.0) == 10
        assert choose_m(10**6, 0.5) == 251
        assert choose_m(2, 0.7) == 2

    def test_exact_cube(self):
        # floating-point cube roots of exact cubes must not round down
        assert choose_m(1000, 1.0) == 10
        assert choose_m(8**3, 1.0) == 8

    def test_guards(self):
        with pytest.raises(DomainError):
            choose_m(1, 1.0)
        with pytest.raises(DomainError):
            choose_m(100, 0.0)


class TestTotalBound:
    def test_links_nonnegative_and_total(self):
        cb = total_bound(4096, 1.0)
        links = cb.links()
        assert all(v >= 0.0 for v in links.values())
        assert cb.total == pytest.approx(sum(links.values()))
        assert all(cb.total >= v for v in links.values())

    def test_negative_link_rejected(self):
        with pytest.raises(DomainError):
            ChainBound(-1.0, 0.0, 0.0, 0.0)

    def test_curve_matches_pointwise(self):
        n, gamma = 2**14, 0.5
        ms = np.array([8, 32, 128])
        curve = total_bound_curve(n, gamma, 1.0, ms)
        for m, val in zip(ms, curve):
            assert val == pytest.approx(total_bound(n, gamma, m=int(m)).total, rel=1e-12)

    @pytest.mark.parametrize("gamma", [0.25, 0.5, 1.0])
    def test_totals_decrease_along_the_rule(self, gamma):
        # the m-rule jumps at small n; the tail from 2^11 is monotone
        totals = [total_bound(2**k, gamma).total for k in range(11, 21)]
        assert all(a >= b - 1e-12 for a, b in zip(totals, totals[1:]))

    @pytest.mark.parametrize("gamma", [0.25, 0.5, 1.0])
    def test_rule_near_optimal(self, gamma):
        for k in (10, 14, 18):
            n = 2**k
            at_rule = total_bound(n, gamma).total
            _, best = minimize_total(n, gamma)
            assert at_rule <= 2.0 * best

    def test_ratio_to_target_rate_bounded(self):
        ratios = []
        for k in range(10, 21):
            n = 2**k
            _, best = minimize_total(n, 1.0)
            ratios.append(best / target_rate(n, 1.0))
        assert max(ratios) / min(ratios) <= 4.0


def test_target_rate_branches():
    n = 4096
    assert target_rate(n, 0.5) == pytest.approx(n ** (-0.1) * math.log(n))
    assert target_rate(n, 1.0) == pytest.approx(n ** (-0.1) * math.log(n))
    assert target_rate(n, 0.25) == pytest.approx(n ** (-0.25 / 4.5) * math.log(n))
