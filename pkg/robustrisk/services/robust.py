"""Worst-case risk under mean-variance and Wasserstein uncertainty.

For an anchor X the worst case is sup { rho(Z) : Z in U_X }. Both
uncertainty sets admit closed forms together with an explicit maximizer X*,
which is returned so callers can check rho(X*) against the closed form.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from robustrisk.services import measures
from robustrisk.services.dual import (
    TIES_RANK,
    DualDensity,
    centered_two_norm,
    q_norm,
    subgradient_density,
)
from robustrisk.services.empirical import (
    EmpiricalDistribution,
    PNorm,
    lp_norm,
    make_distribution,
    mean,
    std,
    wasserstein_distance,
)
from robustrisk.services.errors import CertificateError, OutOfRange, Unsupported, ValidityDomain
from robustrisk.services.measures import (
    ESSpec,
    EntropicSpec,
    ExpectileSpec,
    MSDSpec,
    RiskMeasureSpec,
    ShortfallQuadraticSpec,
    SpectralFunction,
    SpectralSpec,
)
from robustrisk.utils.constants import TOLERANCES

logger = logging.getLogger(__name__)

MEMBERSHIP_TOL = TOLERANCES["certificate"]


# ============================================================================
# TYPES
# ============================================================================


@dataclass(frozen=True)
class MeanVariance:
    """U_X = {Z : E[Z] = E[X], sigma(Z) <= sigma(X)}."""

    name = "mean-variance"


@dataclass(frozen=True)
class WassersteinBall:
    """U_X = {Z : d_Wp(X, Z) <= eps}."""

    norm: PNorm
    eps: float
    name = "wasserstein"

    def __post_init__(self):
        if not (self.eps >= 0.0) or math.isinf(self.eps):
            raise OutOfRange(f"eps must be a finite number >= 0, got {self.eps}")


UncertaintySpec = Union[MeanVariance, WassersteinBall]


@dataclass(frozen=True)
class WorstCaseResult:
    """Closed-form worst case with its constructed maximizer.

    Attributes:
        value: Closed-form worst-case risk
        base_value: rho(X) at the anchor
        premium: value - base_value
        norm_term: sup of ||dQ/dP - 1||_2 (mean-variance) or M (Wasserstein)
        argmax: Constructed X* inside the uncertainty set
        argmax_value: rho(X*)
        discretization_gap: value - argmax_value
        tight: Whether value is the supremum (otherwise a lower bound)
        certified: Oracle verdict == CONFIRMED, when an oracle has run
        oracle_gap: Oracle gap, when an oracle has run
    """

    measure: RiskMeasureSpec
    uncertainty: UncertaintySpec
    value: float
    base_value: float
    premium: float
    norm_term: float
    argmax: EmpiricalDistribution
    argmax_value: float
    discretization_gap: float
    tight: bool
    certified: Optional[bool] = None
    oracle_gap: Optional[float] = None


def _scale(d: EmpiricalDistribution) -> float:
    return max(1.0, float(np.max(np.abs(d.values))))


def _result(spec, uncertainty, d, value, norm_term, argmax, tight) -> WorstCaseResult:
    base = measures.evaluate(spec, d)
    attained = measures.evaluate(spec, argmax)
    if value < base - TOLERANCES["identity"] * _scale(d):
        raise CertificateError(f"worst case {value!r} below base value {base!r} for {spec.name}")
    return WorstCaseResult(
        measure=spec,
        uncertainty=uncertainty,
        value=float(value),
        base_value=float(base),
        premium=float(value - base),
        norm_term=float(norm_term),
        argmax=argmax,
        argmax_value=float(attained),
        discretization_gap=float(value - attained),
        tight=tight,
    )


# ============================================================================
# MEAN-VARIANCE
# ============================================================================

MEAN_VARIANCE_SPECS = (ESSpec, SpectralSpec, ExpectileSpec, MSDSpec, ShortfallQuadraticSpec)


def expectile_mixture_spectrum(alpha: float) -> SpectralFunction:
    """Spectrum attaining the expectile mean-variance worst case.

    Mixes ES at level alpha with the expectation using the weight
    gamma* = 1 / (2 (1 - alpha)).
    """
    gamma = 1.0 / (2.0 * (1.0 - alpha))
    return SpectralFunction(starts=np.array([0.0, alpha]),
                            levels=np.array([(1.0 - gamma) / alpha + gamma, gamma]))


def _shortfall_mean_variance(l0: float, sigma: float):
    """Critical second moment y* and the worst-case offset for quadratic shortfall."""
    slack = 2.0 * l0 - sigma * sigma
    if slack <= 0.0:
        raise ValidityDomain(
            f"shortfall worst case is unbounded: sigma^2 = {sigma * sigma:g} >= 2 l0 = {2.0 * l0:g}"
        )
    return 2.0 * l0 / slack, math.sqrt(slack)


def _mean_variance_density(spec: RiskMeasureSpec, n: int, sigma: float) -> np.ndarray:
    """Per-atom density whose centered direction gives the maximizer."""
    if isinstance(spec, ESSpec):
        return n * spec.spectrum.cell_masses(n)
    if isinstance(spec, SpectralSpec):
        return n * spec.phi.cell_masses(n)
    if isinstance(spec, ExpectileSpec):
        return n * expectile_mixture_spectrum(spec.alpha).cell_masses(n)
    spike = np.full(n, -1.0)
    spike[0] = n - 1.0
    if isinstance(spec, MSDSpec):
        # V = sqrt(n) on the lowest atom minimizes E[V] under ||V||_2 = 1
        return 1.0 + spec.beta * spike / math.sqrt(n)
    # ShortfallQuadraticSpec: 1 + lam (n e_0 - 1) with E[Q^2] = y*
    second, _ = _shortfall_mean_variance(spec.l0, sigma)
    lam = min(1.0, math.sqrt((second - 1.0) / (n - 1.0)))
    return 1.0 + lam * spike


def mean_variance_argmax(d: EmpiricalDistribution, weights: np.ndarray) -> EmpiricalDistribution:
    """X* = E[X] - sigma(X) (w - 1) / ||w - 1||_2.

    Raises:
        CertificateError: If X* leaves the mean-variance set
    """
    center, sigma = mean(d), std(d)
    direction = np.asarray(weights, dtype=float) - np.mean(weights)
    size = math.sqrt(float(np.mean(direction * direction)))
    if sigma == 0.0 or size <= 1e-12:
        return d
    argmax = make_distribution(center - sigma * direction / size)
    tol = MEMBERSHIP_TOL * _scale(d)
    if abs(mean(argmax) - center) > tol or abs(std(argmax) - sigma) > tol:
        raise CertificateError("mean-variance argmax left the uncertainty set")
    return argmax


def wc_mean_variance(spec: RiskMeasureSpec, d: EmpiricalDistribution) -> WorstCaseResult:
    """Worst case over {Z : E[Z] = E[X], sigma(Z) <= sigma(X)}.

    Args:
        spec: ES, Spectral, Expectile, MSD or ShortfallQuadratic
        d: Anchor distribution

    Returns:
        WorstCaseResult with the closed-form value and maximizer

    Raises:
        Unsupported: For VaR and Entropic
        ValidityDomain: For shortfall with sigma^2 >= 2 l0
    """
    if not isinstance(spec, MEAN_VARIANCE_SPECS):
        raise Unsupported(f"no mean-variance worst case for measure '{spec.name}'")
    uncertainty = MeanVariance()
    center, sigma = mean(d), std(d)

    if isinstance(spec, ShortfallQuadraticSpec):
        second, offset = _shortfall_mean_variance(spec.l0, sigma)
        norm_term = math.sqrt(second - 1.0)
        value = -center - offset
    else:
        if isinstance(spec, ESSpec):
            norm_term = math.sqrt((1.0 - spec.alpha) / spec.alpha)
        elif isinstance(spec, SpectralSpec):
            norm_term = spec.phi.centered_two_norm()
        elif isinstance(spec, ExpectileSpec):
            ratio = spec.ratio
            norm_term = (ratio - 1.0) / (2.0 * math.sqrt(ratio))
        else:
            norm_term = spec.beta
        value = -center + sigma * norm_term

    if d.is_constant:
        # U_X = {X}
        argmax = d
    else:
        argmax = mean_variance_argmax(d, _mean_variance_density(spec, d.n, sigma))
    result = _result(spec, uncertainty, d, value, norm_term, argmax, tight=True)
    logger.debug("[ROBUST] mean-variance %s: value=%.12g gap=%.3g", spec.name, result.value,
                 result.discretization_gap)
    return result


# ============================================================================
# WASSERSTEIN
# ============================================================================

WASSERSTEIN_SPECS = (ESSpec, SpectralSpec, ExpectileSpec, MSDSpec, EntropicSpec)


def is_wasserstein_tight(spec: RiskMeasureSpec, ball: WassersteinBall) -> bool:
    """Whether rho + eps M is the supremum (and not only a lower bound)."""
    if isinstance(spec, (ESSpec, SpectralSpec)) or ball.norm.is_infinite or ball.eps == 0.0:
        return True
    if isinstance(spec, ExpectileSpec):
        return spec.alpha == 0.5
    if isinstance(spec, MSDSpec):
        return spec.beta == 0.0
    return False


def wasserstein_argmax(d: EmpiricalDistribution, den: DualDensity, norm: PNorm,
                       eps: float) -> EmpiricalDistribution:
    """Lower X along the density so that d_Wp(X*, X) = eps.

    The density must be non-increasing in atom order so X* stays sorted.

    Raises:
        CertificateError: If X* falls outside the ball
    """
    if eps == 0.0:
        return d
    weights = den.weights
    if norm.is_infinite:
        argmax = make_distribution(d.values - eps)
    elif norm.p == 1.0:
        top = float(np.max(weights))
        chosen = weights >= top * (1.0 - 1e-12)
        share = float(np.mean(chosen))
        argmax = make_distribution(d.values - (eps / share) * chosen)
    else:
        # Normalized by the top weight so q/p -> inf near p = 1 cannot overflow
        shape = (weights / np.max(weights)) ** (norm.q / norm.p)
        # shape is non-increasing, so X - k shape stays sorted and d_Wp = k ||shape||_p
        k = eps / lp_norm(shape, norm.p)
        argmax = make_distribution(d.values - k * shape)
    distance = wasserstein_distance(argmax, d, norm)
    if distance > eps + MEMBERSHIP_TOL * max(1.0, eps):
        raise CertificateError(f"Wasserstein argmax at distance {distance!r} > eps={eps!r}")
    return argmax


def wc_wasserstein(spec: RiskMeasureSpec, d: EmpiricalDistribution, norm: PNorm,
                   eps: float) -> WorstCaseResult:
    """Worst case over the p-Wasserstein ball of radius eps: rho(X) + eps M.

    M is the q-norm of the maximal-norm subgradient density at X.

    Args:
        spec: ES, Spectral, Expectile, MSD or Entropic
        d: Anchor distribution
        norm: Exponent pair of the ball
        eps: Radius

    Returns:
        WorstCaseResult; `tight` is False where rho + eps M is only a lower bound

    Raises:
        Unsupported: For VaR and ShortfallQuadratic
        OutOfRange: For a negative eps
    """
    if not isinstance(spec, WASSERSTEIN_SPECS):
        raise Unsupported(f"no Wasserstein worst case for measure '{spec.name}'")
    ball = WassersteinBall(norm=norm, eps=float(eps))
    den = subgradient_density(spec, d, ties=TIES_RANK, norm=norm)
    big_m = q_norm(den, norm)
    value = measures.evaluate(spec, d) + ball.eps * big_m
    argmax = wasserstein_argmax(d, den, norm, ball.eps)
    result = _result(spec, ball, d, value, big_m, argmax, tight=is_wasserstein_tight(spec, ball))
    logger.debug("[ROBUST] wasserstein %s p=%g eps=%g: M=%.12g tight=%s", spec.name, norm.p,
                 ball.eps, big_m, result.tight)
    return result


def wc_spectral_wasserstein_norm(phi: SpectralFunction, norm: PNorm) -> float:
    """||phi||_q, the Wasserstein premium per unit radius of a spectral measure."""
    return phi.norm(norm.q)


def entropic_gaussian_norm(gamma: float, sigma: float) -> float:
    """||dQ/dP||_2 of the entropic subgradient when X is normal with std sigma."""
    if not (gamma > 0.0):
        raise OutOfRange(f"gamma must be > 0, got {gamma}")
    return math.exp(0.5 * (gamma * sigma) ** 2)


def mean_variance_penalty_term(den: DualDensity, d: EmpiricalDistribution) -> float:
    """sigma(X) ||dQ/dP - 1||_2, the mean-variance premium contributed by Q."""
    return std(d) * centered_two_norm(den)


# ============================================================================
# DISPATCH
# ============================================================================


def worst_case(spec: RiskMeasureSpec, d: EmpiricalDistribution,
               uncertainty: UncertaintySpec) -> WorstCaseResult:
    """Closed-form worst case for either uncertainty type."""
    if isinstance(uncertainty, WassersteinBall):
        return wc_wasserstein(spec, d, uncertainty.norm, uncertainty.eps)
    return wc_mean_variance(spec, d)


def is_robustly_acceptable(spec: RiskMeasureSpec, d: EmpiricalDistribution,
                           uncertainty: UncertaintySpec) -> bool:
    """Whether every Z in U_X is acceptable, i.e. the worst case is <= 0."""
    return worst_case(spec, d, uncertainty).value <= 0.0
