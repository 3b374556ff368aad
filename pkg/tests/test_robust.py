"""Tests for mean-variance and Wasserstein worst cases."""

import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.stats import norm as normal

from robustrisk.services import measures, robust
from robustrisk.services.dual import q_norm, subgradient_density
from robustrisk.services.empirical import (
    PNorm,
    make_distribution,
    mean,
    scale,
    shift,
    std,
    wasserstein_distance,
)
from robustrisk.services.errors import Unsupported, ValidityDomain
from robustrisk.services.measures import (
    ESSpec,
    EntropicSpec,
    ExpectileSpec,
    MSDSpec,
    ShortfallQuadraticSpec,
    SpectralFunction,
    SpectralSpec,
    VaRSpec,
)
from robustrisk.services.robust import (
    MeanVariance,
    WassersteinBall,
    entropic_gaussian_norm,
    is_robustly_acceptable,
    mean_variance_penalty_term,
    wc_mean_variance,
    wc_spectral_wasserstein_norm,
    wc_wasserstein,
    worst_case,
)

P1 = PNorm.from_p(1)
P2 = PNorm.from_p(2)
P3 = PNorm.from_p(3)
PINF = PNorm.from_p(math.inf)

STEP_SPECTRUM = SpectralFunction.from_intervals([(0.0, 0.25, 2.5), (0.25, 0.5, 1.0), (0.5, 1.0, 0.25)])
MEAN_VARIANCE_SPECS = [
    ESSpec(alpha=0.25),
    SpectralSpec(phi=STEP_SPECTRUM),
    ExpectileSpec(alpha=0.25),
    MSDSpec(beta=0.5),
]
WASSERSTEIN_SPECS = [
    ESSpec(alpha=0.25),
    SpectralSpec(phi=STEP_SPECTRUM),
    ExpectileSpec(alpha=0.25),
    MSDSpec(beta=0.5),
    EntropicSpec(gamma=0.8),
]


def _sample(seed: int, n: int, loc: float = 0.3, spread: float = 1.7):
    return make_distribution(np.random.default_rng(seed).normal(loc, spread, size=n))


class TestMeanVarianceClosedForms:
    """Test mean-variance worst-case values."""

    def test_es_standardized(self, standardized):
        """Test ES at alpha = 0.25 with E = 0, sigma = 1 gives sqrt(3)."""
        result = wc_mean_variance(ESSpec(alpha=0.25), standardized(8))
        assert result.value == pytest.approx(math.sqrt(3.0), abs=1e-10)
        assert result.norm_term == pytest.approx(math.sqrt(3.0))

    @pytest.mark.parametrize("n", [8, 20, 50])
    def test_es_random(self, n):
        """Test -E + sigma sqrt((1 - alpha)/alpha) on random samples."""
        for seed in range(7):
            d = _sample(seed, n)
            for alpha in (0.25, 0.5):
                result = wc_mean_variance(ESSpec(alpha=alpha), d)
                expected = -mean(d) + std(d) * math.sqrt((1 - alpha) / alpha)
                assert result.value == pytest.approx(expected, abs=1e-10)

    def test_msd_two_point(self):
        """Test MSD beta = 0.5 on [-1, 3]: -1 + 0.5 * 2."""
        result = wc_mean_variance(MSDSpec(beta=0.5), make_distribution([-1, 3]))
        assert result.value == pytest.approx(0.0, abs=1e-12)

    def test_msd_random(self):
        """Test -E + beta sigma."""
        d = _sample(3, 20)
        result = wc_mean_variance(MSDSpec(beta=0.8), d)
        assert result.value == pytest.approx(-mean(d) + 0.8 * std(d), abs=1e-10)

    def test_expectile_random(self):
        """Test -E + sigma (k - 1) / (2 sqrt(k)) with k = (1 - alpha)/alpha."""
        d = _sample(4, 20)
        for alpha in (0.1, 0.25, 0.5):
            k = (1 - alpha) / alpha
            result = wc_mean_variance(ExpectileSpec(alpha=alpha), d)
            assert result.value == pytest.approx(-mean(d) + std(d) * (k - 1) / (2 * math.sqrt(k)), abs=1e-10)

    def test_spectral_uses_step_norm(self):
        """Test -E + sigma ||phi - 1||_2."""
        d = _sample(5, 16)
        result = wc_mean_variance(SpectralSpec(phi=STEP_SPECTRUM), d)
        assert result.value == pytest.approx(-mean(d) + std(d) * STEP_SPECTRUM.centered_two_norm(), abs=1e-10)

    def test_shortfall_valid(self, standardized):
        """Test -E - sqrt(2 l0 - sigma^2) inside the validity domain."""
        result = wc_mean_variance(ShortfallQuadraticSpec(l0=1.0), standardized(8))
        assert result.value == pytest.approx(-1.0, abs=1e-10)

    def test_shortfall_invalid(self, standardized):
        """Test sigma^2 >= 2 l0 is outside the validity domain."""
        with pytest.raises(ValidityDomain):
            wc_mean_variance(ShortfallQuadraticSpec(l0=0.5), standardized(8))

    def test_constant(self):
        """Test U_X = {X} for a constant."""
        d = make_distribution([2.0, 2.0, 2.0])
        result = wc_mean_variance(ESSpec(alpha=0.5), d)
        assert result.value == pytest.approx(-2.0)
        assert result.argmax == d

    @pytest.mark.parametrize("spec", [VaRSpec(alpha=0.1), EntropicSpec(gamma=1.0)], ids=lambda s: s.name)
    def test_unsupported(self, spec):
        """Test measures without a mean-variance closed form."""
        with pytest.raises(Unsupported):
            wc_mean_variance(spec, _sample(0, 8))


class TestMeanVarianceArgmax:
    """Test the constructed mean-variance maximizer."""

    @pytest.mark.parametrize("spec", MEAN_VARIANCE_SPECS + [ShortfallQuadraticSpec(l0=5.0)],
                             ids=lambda spec: spec.name)
    def test_membership(self, spec):
        """Test E[X*] = E[X] and sigma(X*) = sigma(X)."""
        d = _sample(6, 24)
        result = wc_mean_variance(spec, d)
        assert mean(result.argmax) == pytest.approx(mean(d), abs=1e-8)
        assert std(result.argmax) == pytest.approx(std(d), abs=1e-8)

    @pytest.mark.parametrize("spec", [ESSpec(alpha=0.25), SpectralSpec(phi=STEP_SPECTRUM),
                                      ExpectileSpec(alpha=0.25), ShortfallQuadraticSpec(l0=5.0)],
                             ids=lambda spec: spec.name)
    def test_attains_value_on_aligned_grid(self, spec):
        """Test rho(X*) equals the closed form when the breakpoints sit on the atom grid."""
        result = wc_mean_variance(spec, _sample(7, 24))
        assert result.argmax_value == pytest.approx(result.value, abs=1e-6)
        assert result.discretization_gap == pytest.approx(0.0, abs=1e-6)

    def test_msd_gap_shrinks_with_atoms(self):
        """Test the MSD maximizer reaches beta sigma sqrt(1 - 1/n)."""
        beta = 0.5
        for n in (2, 8, 64):
            d = _sample(8, n)
            result = wc_mean_variance(MSDSpec(beta=beta), d)
            expected = -mean(d) + beta * std(d) * math.sqrt(1.0 - 1.0 / n)
            assert result.argmax_value == pytest.approx(expected, abs=1e-9)

    def test_es_fractional_tail_within_widened_tolerance(self):
        """Test the fractional-tail gap stays below 5/n."""
        n = 10
        result = wc_mean_variance(ESSpec(alpha=0.25), _sample(9, n))
        assert 0.0 <= result.discretization_gap <= 5.0 / n

    def test_premium_is_sigma_times_centered_norm(self):
        """Test the premium equals sigma ||w - 1||_2 for the tail density."""
        d = _sample(10, 16)
        den = subgradient_density(ESSpec(alpha=0.25), d, ties="rank")
        result = wc_mean_variance(ESSpec(alpha=0.25), d)
        assert result.value - (-mean(d)) == pytest.approx(mean_variance_penalty_term(den, d))


class TestWassersteinClosedForms:
    """Test rho + eps M."""

    def test_zero_radius(self):
        """Test eps = 0 returns rho and X."""
        d = _sample(11, 12)
        for spec in WASSERSTEIN_SPECS:
            result = wc_wasserstein(spec, d, P2, 0.0)
            assert result.value == pytest.approx(measures.evaluate(spec, d))
            assert result.argmax == d

    def test_es_p1_premium(self):
        """Test ES at alpha = 0.05, p = 1, eps = 0.1: premium 2."""
        d = _sample(12, 40)
        result = wc_wasserstein(ESSpec(alpha=0.05), d, P1, 0.1)
        assert result.premium == pytest.approx(2.0, abs=1e-12)
        assert result.value == pytest.approx(measures.es(d, 0.05) + 2.0)

    @pytest.mark.parametrize("norm", [P2, P3], ids=["p2", "p3"])
    def test_es_exponent(self, norm):
        """Test the ES premium per unit radius is (1/alpha)^(1/p)."""
        d = _sample(13, 40)
        result = wc_wasserstein(ESSpec(alpha=0.25), d, norm, 0.05)
        assert result.norm_term == pytest.approx(4.0 ** (1.0 / norm.p), abs=1e-12)

    @pytest.mark.parametrize("norm", [P1, P2, P3, PINF], ids=["p1", "p2", "p3", "pinf"])
    def test_constant_entropic(self, norm):
        """Test -c + eps for a constant under any p."""
        result = wc_wasserstein(EntropicSpec(gamma=1.3), make_distribution([0.4] * 6), norm, 0.2)
        assert result.value == pytest.approx(-0.4 + 0.2)

    def test_msd_p2_norm(self):
        """Test M = sqrt(1 + beta^2 (1 - E[V]^2)) for MSD."""
        beta = 0.5
        d = _sample(14, 30)
        downside = np.maximum(mean(d) - d.values, 0.0)
        ev = np.mean(downside) / math.sqrt(np.mean(downside ** 2))
        result = wc_wasserstein(MSDSpec(beta=beta), d, P2, 0.1)
        assert result.premium == pytest.approx(0.1 * math.sqrt(1.0 + beta ** 2 * (1.0 - ev ** 2)), abs=1e-10)

    @pytest.mark.parametrize("spec", WASSERSTEIN_SPECS, ids=lambda spec: spec.name)
    def test_p_infinity_premium_is_eps(self, spec):
        """Test M = 1 when q = 1."""
        result = wc_wasserstein(spec, _sample(15, 20), PINF, 0.3)
        assert result.premium == pytest.approx(0.3)

    @pytest.mark.parametrize("spec", WASSERSTEIN_SPECS, ids=lambda spec: spec.name)
    @pytest.mark.parametrize("norm", [P1, P2, PINF], ids=["p1", "p2", "pinf"])
    def test_linear_in_eps(self, spec, norm):
        """Test three radii are collinear."""
        d = _sample(16, 20)
        values = [wc_wasserstein(spec, d, norm, eps).value for eps in (0.1, 0.2, 0.4)]
        assert abs((values[2] - values[0]) - 3.0 * (values[1] - values[0])) <= 1e-10
        assert values[0] <= values[1] <= values[2]

    def test_norm_matches_subgradient(self):
        """Test M is the q-norm of the rank subgradient density."""
        d = _sample(17, 20)
        spec = EntropicSpec(gamma=0.8)
        den = subgradient_density(spec, d, ties="rank", norm=P3)
        assert wc_wasserstein(spec, d, P3, 0.1).norm_term == pytest.approx(q_norm(den, P3))

    @pytest.mark.parametrize("spec", [VaRSpec(alpha=0.1), ShortfallQuadraticSpec(l0=1.0)], ids=lambda s: s.name)
    def test_unsupported(self, spec):
        """Test measures without a Wasserstein closed form."""
        with pytest.raises(Unsupported):
            wc_wasserstein(spec, _sample(0, 8), P2, 0.1)

    def test_negative_radius(self):
        """Test eps < 0 is rejected."""
        with pytest.raises(ValueError):
            wc_wasserstein(ESSpec(alpha=0.5), _sample(0, 8), P2, -1.0)


class TestWassersteinArgmax:
    """Test the constructed Wasserstein maximizer."""

    @pytest.mark.parametrize("spec", [ESSpec(alpha=0.25), SpectralSpec(phi=STEP_SPECTRUM)], ids=lambda s: s.name)
    @pytest.mark.parametrize("norm", [P1, P2, P3, PINF], ids=["p1", "p2", "p3", "pinf"])
    def test_spectral_family_attains(self, spec, norm):
        """Test rho(X*) = rho + eps M and d_Wp(X*, X) <= eps."""
        d = _sample(18, 20)
        result = wc_wasserstein(spec, d, norm, 0.15)
        assert result.tight
        assert wasserstein_distance(result.argmax, d, norm) <= 0.15 + 1e-8
        assert result.argmax_value == pytest.approx(result.value, abs=1e-6)

    def test_es_fractional_tail_p1_is_exact(self):
        """Test lowering the full-weight atoms is exact for a fractional tail."""
        d = _sample(19, 10)
        result = wc_wasserstein(ESSpec(alpha=0.25), d, P1, 0.2)
        assert result.argmax_value == pytest.approx(result.value, abs=1e-12)

    @pytest.mark.parametrize("spec", WASSERSTEIN_SPECS, ids=lambda spec: spec.name)
    def test_p_infinity_exact(self, spec):
        """Test X - eps attains the value for every measure."""
        d = _sample(20, 16)
        result = wc_wasserstein(spec, d, PINF, 0.25)
        np.testing.assert_allclose(result.argmax.values, d.values - 0.25)
        assert result.argmax_value == pytest.approx(result.value, abs=1e-9)

    @pytest.mark.parametrize("spec", WASSERSTEIN_SPECS, ids=lambda spec: spec.name)
    def test_p_infinity_density_unchanged(self, spec):
        """Test the canonical density at X* equals the density at X."""
        d = _sample(21, 16)
        result = wc_wasserstein(spec, d, PINF, 0.25)
        before = subgradient_density(spec, d).weights
        after = subgradient_density(spec, result.argmax).weights
        np.testing.assert_allclose(after, before, atol=1e-8)

    @pytest.mark.parametrize("spec", [ExpectileSpec(alpha=0.25), MSDSpec(beta=0.5), EntropicSpec(gamma=0.8)],
                             ids=lambda s: s.name)
    @pytest.mark.parametrize("norm", [P1, P2], ids=["p1", "p2"])
    def test_non_tight_is_lower_bound(self, spec, norm):
        """Test rho(X*) >= rho + eps M where the closed form is only a lower bound."""
        d = _sample(22, 20)
        result = wc_wasserstein(spec, d, norm, 0.2)
        assert not result.tight
        assert result.argmax_value >= result.value - 1e-9
        assert wasserstein_distance(result.argmax, d, norm) <= 0.2 + 1e-8

    @pytest.mark.parametrize("alpha", [0.05, 0.25])
    @pytest.mark.parametrize("p", [1.001, 1.01, 1.05, 1.5])
    def test_es_exponent_near_one(self, p, alpha):
        """Test the maximizer stays in the ball and attains the value as p approaches 1."""
        d = _sample(25, 40)
        norm = PNorm.from_p(p)
        result = wc_wasserstein(ESSpec(alpha=alpha), d, norm, 0.1)
        assert result.value == pytest.approx(measures.es(d, alpha) + 0.1 * (1.0 / alpha) ** (1.0 / p), rel=1e-10)
        assert wasserstein_distance(result.argmax, d, norm) <= 0.1 + 1e-8
        assert wasserstein_distance(result.argmax, d, norm) == pytest.approx(0.1, rel=1e-9)
        assert result.argmax_value == pytest.approx(result.value, abs=1e-8)

    @pytest.mark.parametrize("p", [1.001, 1.01, 1.05, 1.5])
    def test_spectral_near_one(self, p):
        """Test a step spectrum is attained with a large conjugate exponent."""
        d = _sample(26, 40)
        norm = PNorm.from_p(p)
        result = wc_wasserstein(SpectralSpec(phi=STEP_SPECTRUM), d, norm, 0.1)
        assert wasserstein_distance(result.argmax, d, norm) <= 0.1 + 1e-8
        assert result.argmax_value == pytest.approx(result.value, abs=1e-8)

    @pytest.mark.parametrize("p", [1.001, 1.01, 1.05, 1.1])
    def test_entropic_near_one(self, p):
        """Test a steep entropic density keeps the maximizer finite and inside the ball."""
        d = _sample(27, 40)
        norm = PNorm.from_p(p)
        result = wc_wasserstein(EntropicSpec(gamma=2.0), d, norm, 0.1)
        assert np.all(np.isfinite(result.argmax.values))
        assert wasserstein_distance(result.argmax, d, norm) <= 0.1 + 1e-8
        assert result.argmax_value >= result.value - 1e-9

    def test_tight_special_cases(self):
        """Test linear cases are flagged tight."""
        d = _sample(23, 10)
        assert wc_wasserstein(ExpectileSpec(alpha=0.5), d, P2, 0.1).tight
        assert wc_wasserstein(MSDSpec(beta=0.0), d, P1, 0.1).tight


class TestSpectralNorm:
    """Test ||phi||_q."""

    @pytest.mark.parametrize("norm", [P1, P2, P3, PINF], ids=["p1", "p2", "p3", "pinf"])
    def test_uniform(self, norm):
        """Test phi = 1."""
        assert wc_spectral_wasserstein_norm(SpectralFunction.uniform(), norm) == pytest.approx(1.0)

    def test_es_sup(self):
        """Test q = inf gives 1/alpha."""
        assert wc_spectral_wasserstein_norm(SpectralFunction.expected_shortfall(0.2), P1) == pytest.approx(5.0)

    def test_es_two_norm(self):
        """Test q = 2 gives (1/alpha)^(1/2)."""
        assert wc_spectral_wasserstein_norm(SpectralFunction.expected_shortfall(0.2), P2) == pytest.approx(
            math.sqrt(5.0))

    @pytest.mark.parametrize("p", [1.001, 1.01, 1.05])
    def test_es_large_conjugate_exponent(self, p):
        """Test ||phi||_q stays finite and equals (1/alpha)^(1/p) when q is large."""
        phi = SpectralFunction.expected_shortfall(0.05)
        assert wc_spectral_wasserstein_norm(phi, PNorm.from_p(p)) == pytest.approx(20.0 ** (1.0 / p), rel=1e-10)

    @pytest.mark.parametrize("norm", [P1, P2, P3, PINF], ids=["p1", "p2", "p3", "pinf"])
    def test_matches_density_on_aligned_grid(self, norm):
        """Test agreement with the subgradient q-norm when n aligns with the breakpoints."""
        d = _sample(24, 16)
        den = subgradient_density(SpectralSpec(phi=STEP_SPECTRUM), d, ties="rank")
        assert wc_spectral_wasserstein_norm(STEP_SPECTRUM, norm) == pytest.approx(q_norm(den, norm), abs=1e-10)


class TestEntropicGaussianNorm:
    """Test the closed-form entropic two-norm for normal samples."""

    def test_against_quantile_grid(self):
        """Test exp(gamma^2 sigma^2 / 2) against a fine normal grid."""
        gamma, sigma, n = 0.5, 1.2, 20000
        grid = sigma * normal.ppf((np.arange(n) + 0.5) / n)
        den = subgradient_density(EntropicSpec(gamma=gamma), make_distribution(grid))
        assert q_norm(den, P2) == pytest.approx(entropic_gaussian_norm(gamma, sigma), rel=1e-3)


# ============================================================================
# PROPERTIES
# ============================================================================

samples = arrays(
    np.float64,
    st.integers(min_value=4, max_value=24),
    elements=st.floats(min_value=-5.0, max_value=5.0, allow_nan=False, allow_infinity=False),
).filter(lambda values: np.ptp(values) > 1e-3)
property_settings = settings(max_examples=100, deadline=None,
                             suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much])

UNCERTAINTY = [MeanVariance(), WassersteinBall(norm=P1, eps=0.2), WassersteinBall(norm=P2, eps=0.2),
               WassersteinBall(norm=PINF, eps=0.2)]
PAIRS = [(spec, uncertainty) for uncertainty in UNCERTAINTY
         for spec in (MEAN_VARIANCE_SPECS if isinstance(uncertainty, MeanVariance) else WASSERSTEIN_SPECS)]


def _pair_id(pair):
    spec, uncertainty = pair
    suffix = "" if isinstance(uncertainty, MeanVariance) else f"-p{uncertainty.norm.p:g}"
    return f"{spec.name}-{uncertainty.name}{suffix}"


class TestWorstCaseProperties:
    """Test properties of the worst-case operators on random samples."""

    @pytest.mark.parametrize("pair", PAIRS, ids=_pair_id)
    @property_settings
    @given(values=samples)
    def test_dominates_base(self, pair, values):
        """Test rho_WC >= rho."""
        spec, uncertainty = pair
        d = make_distribution(values)
        assert worst_case(spec, d, uncertainty).value >= measures.evaluate(spec, d) - 1e-9

    @pytest.mark.parametrize("pair", PAIRS, ids=_pair_id)
    @property_settings
    @given(values=samples, c=st.floats(min_value=-3.0, max_value=3.0))
    def test_translation(self, pair, values, c):
        """Test rho_WC(X + c) = rho_WC(X) - c."""
        spec, uncertainty = pair
        d = make_distribution(values)
        base = worst_case(spec, d, uncertainty).value
        assert worst_case(spec, shift(d, c), uncertainty).value == pytest.approx(base - c, abs=1e-8)

    @pytest.mark.parametrize("spec", MEAN_VARIANCE_SPECS, ids=lambda spec: spec.name)
    @property_settings
    @given(values=samples, lam=st.floats(min_value=0.1, max_value=5.0))
    def test_mean_variance_homogeneity(self, spec, values, lam):
        """Test rho_WC(lam X) = lam rho_WC(X) for coherent measures."""
        d = make_distribution(values)
        base = wc_mean_variance(spec, d).value
        assert wc_mean_variance(spec, scale(d, lam)).value == pytest.approx(lam * base, abs=1e-8)


class TestAcceptance:
    """Test robust acceptance."""

    def test_shifting_makes_acceptable(self):
        """Test adding the worst-case capital makes X robustly acceptable."""
        d = _sample(25, 12)
        spec = ESSpec(alpha=0.25)
        ball = WassersteinBall(norm=P2, eps=0.1)
        capital = worst_case(spec, d, ball).value
        assert is_robustly_acceptable(spec, shift(d, capital + 1e-9), ball)
        assert not is_robustly_acceptable(spec, shift(d, capital - 0.01), ball)

    def test_robust_is_stricter_than_base(self):
        """Test a position acceptable at the base can fail robustly."""
        d = _sample(26, 12)
        spec = ESSpec(alpha=0.25)
        capital = measures.es(d, 0.25)
        shifted = shift(d, capital + 1e-6)
        assert measures.is_acceptable(spec, shifted)
        assert not is_robustly_acceptable(spec, shifted, MeanVariance())


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
