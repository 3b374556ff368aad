"""Dual densities dQ/dP, their norms, and penalty terms.

Every measure here has the dual representation

    rho(X) = max_Q { E_Q[-X] - penalty(Q) }

and the densities returned by `subgradient_density` attain that maximum at
X. Densities are per-atom weight vectors aligned to the sorted atoms of the
distribution they were built from.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp, xlogy

from robustrisk.services import measures
from robustrisk.services.empirical import EmpiricalDistribution, PNorm, lp_norm
from robustrisk.services.errors import CertificateError, InvalidDensity, OutOfRange, Unsupported
from robustrisk.services.measures import (
    ESSpec,
    EntropicSpec,
    ExpectileSpec,
    MSDSpec,
    RiskMeasureSpec,
    ShortfallQuadraticSpec,
    SpectralSpec,
)
from robustrisk.utils.constants import TOLERANCES

logger = logging.getLogger(__name__)

TIES_AVERAGE = "average"
TIES_RANK = "rank"
_MEMBERSHIP_TOL = 1e-9


class Unbounded(float):
    """Marker for an infinite penalty, distinguishable from an overflowed float."""

    def __new__(cls):
        return super().__new__(cls, math.inf)

    def __repr__(self) -> str:
        return "UNBOUNDED"


UNBOUNDED = Unbounded()


def is_unbounded(value: float) -> bool:
    return isinstance(value, Unbounded)


@dataclass(frozen=True, eq=False)
class DualDensity:
    """dQ/dP as per-atom weights aligned to sorted atom values."""

    weights: np.ndarray

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float).ravel()
        if weights.size == 0:
            raise InvalidDensity("density needs at least one atom")
        if not np.all(np.isfinite(weights)):
            raise InvalidDensity("density weights must be finite")
        if np.min(weights) < -TOLERANCES["negative_weight"]:
            raise InvalidDensity(f"density weight {np.min(weights):g} is negative")
        total = float(np.mean(weights))
        if abs(total - 1.0) > TOLERANCES["normalization"]:
            raise InvalidDensity(f"density must average to 1, got {total:.15g}")
        weights = np.maximum(weights, 0.0)
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)

    @property
    def n(self) -> int:
        return int(self.weights.shape[0])

    def expectation(self, d: EmpiricalDistribution) -> float:
        """E_Q[X] for the distribution the density is aligned to."""
        if d.n != self.n:
            raise InvalidDensity(f"density has {self.n} atoms, distribution has {d.n}")
        return float(np.dot(self.weights, d.values)) / self.n


def _normalized(raw: np.ndarray) -> DualDensity:
    return DualDensity(weights=raw / np.mean(raw))


def _average_ties(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Give atoms with equal values their common average weight."""
    _, inverse, counts = np.unique(values, return_inverse=True, return_counts=True)
    if counts.size == values.size:
        return weights
    sums = np.bincount(inverse, weights=weights)
    return (sums / counts)[inverse]


# ============================================================================
# NORMS
# ============================================================================


def q_norm(den: DualDensity, norm: PNorm) -> float:
    """||dQ/dP||_q with q the conjugate of norm.p."""
    q = norm.q
    if q == 1.0:
        total = float(np.mean(den.weights))
        assert abs(total - 1.0) <= TOLERANCES["normalization"], total
        return 1.0
    return lp_norm(den.weights, q)


def centered_two_norm(den: DualDensity) -> float:
    """||dQ/dP - 1||_2, checked against ||dQ/dP||_2^2 - 1."""
    centered = den.weights - 1.0
    value = math.sqrt(float(np.mean(centered * centered)))
    second = float(np.mean(den.weights * den.weights))
    if abs(value * value + 1.0 - second) > TOLERANCES["normalization"] * max(1.0, second):
        raise CertificateError(f"centered norm identity failed: {value ** 2 + 1.0} vs {second}")
    return value


# ============================================================================
# SUBGRADIENTS
# ============================================================================


def _tail_density(alpha: float, n: int) -> np.ndarray:
    whole, fraction = measures.tail_split(alpha, n)
    weights = np.zeros(n)
    weights[:whole] = 1.0 / alpha
    if fraction > 0.0:
        weights[whole] = fraction / alpha
    return weights


def _two_level(alpha: float, n: int, below: int) -> np.ndarray:
    raw = np.full(n, alpha)
    raw[:below] = 1.0 - alpha
    return raw / np.mean(raw)


def _spike_semideviation(beta: float, n: int) -> np.ndarray:
    """MSD member 1 + beta (V - E[V]) with V = sqrt(n) on the lowest atom."""
    v = np.zeros(n)
    v[0] = math.sqrt(n)
    return 1.0 + beta * (v - np.mean(v))


def _density_weights(spec: RiskMeasureSpec, d: EmpiricalDistribution, ties: str,
                     norm: Optional[PNorm]) -> np.ndarray:
    values = d.values
    n = d.n
    if isinstance(spec, ESSpec):
        weights = _tail_density(spec.alpha, n)
        return weights if ties == TIES_RANK else _average_ties(values, weights)

    if isinstance(spec, SpectralSpec):
        weights = n * spec.phi.cell_masses(n)
        return weights if ties == TIES_RANK else _average_ties(values, weights)

    if isinstance(spec, ExpectileSpec):
        point = measures.expectile_point(d, spec.alpha)
        tol = 1e-12 * max(1.0, abs(point))
        lowest = int(np.searchsorted(values, point - tol, side="left"))
        highest = int(np.searchsorted(values, point + tol, side="right"))
        if ties != TIES_RANK or lowest == highest:
            return _two_level(spec.alpha, n, lowest)
        # Atoms at the expectile may take either level; keep the member with the largest q-norm
        q = norm.q if norm is not None else math.inf
        candidates = [_two_level(spec.alpha, n, below) for below in range(lowest, highest + 1)]
        return max(candidates, key=lambda weights: lp_norm(weights, q))

    if isinstance(spec, MSDSpec):
        center = float(np.mean(values))
        downside = np.maximum(center - values, 0.0)
        size = math.sqrt(float(np.mean(downside * downside)))
        if size == 0.0:
            if ties == TIES_RANK:
                return _spike_semideviation(spec.beta, n)
            return np.ones(n)
        v = downside / size
        return 1.0 + spec.beta * (v - np.mean(v))

    if isinstance(spec, EntropicSpec):
        exponent = -spec.gamma * values
        return n * np.exp(exponent - logsumexp(exponent))

    if isinstance(spec, ShortfallQuadraticSpec):
        level = measures.shortfall_quadratic(d, spec.l0)
        excess = np.maximum(-values - level, 0.0)
        return excess / np.mean(excess)

    raise Unsupported(f"no subgradient density for measure '{spec.name}'")


def subgradient_density(spec: RiskMeasureSpec, d: EmpiricalDistribution,
                        ties: str = TIES_AVERAGE, norm: Optional[PNorm] = None) -> DualDensity:
    """Member of the subdifferential of rho at X.

    Args:
        spec: Measure (ES, Spectral, Expectile, MSD, Entropic or ShortfallQuadratic)
        d: Distribution X
        ties: "average" returns the canonical member, a function of the atom
            value; "rank" returns the member with maximal q-norm
        norm: Exponent pair whose q-norm "rank" maximizes (default q = inf)

    Returns:
        Density Q with E_Q[-X] - penalty(Q) = rho(X)

    Raises:
        Unsupported: For VaR
        CertificateError: If the attainment identity fails
    """
    if ties not in (TIES_AVERAGE, TIES_RANK):
        raise OutOfRange(f"ties must be '{TIES_AVERAGE}' or '{TIES_RANK}', got {ties!r}")
    den = _normalized(np.asarray(_density_weights(spec, d, ties, norm), dtype=float))
    _certify(spec, d, den)
    return den


def _certify(spec: RiskMeasureSpec, d: EmpiricalDistribution, den: DualDensity):
    value = measures.evaluate(spec, d)
    attained = -den.expectation(d) - _any_penalty(spec, den)
    scale = max(1.0, float(np.max(np.abs(d.values))))
    if not abs(attained - value) <= TOLERANCES["certificate"] * scale:
        raise CertificateError(
            f"subgradient certificate failed for {spec.name}: E_Q[-X] - penalty = {attained!r}, rho = {value!r}"
        )


# ============================================================================
# PENALTIES
# ============================================================================


def _spectral_member(phi: measures.SpectralFunction, weights: np.ndarray) -> bool:
    n = weights.size
    partial = np.cumsum(np.sort(weights)[::-1]) / n
    bound = phi.cumulative(np.arange(1, n + 1, dtype=float) / n)
    return bool(np.all(partial <= bound + _MEMBERSHIP_TOL * max(1.0, float(partial[-1]))))


def _msd_member(beta: float, weights: np.ndarray) -> bool:
    deviation = weights - 1.0
    spread = math.sqrt(float(np.mean(deviation * deviation)))
    if beta == 0.0:
        return spread <= _MEMBERSHIP_TOL
    # weights = 1 + beta (V - c) with V >= 0, ||V||_2 <= 1 and c = E[V]
    ratio = spread / beta
    if ratio > 1.0 + _MEMBERSHIP_TOL:
        return False
    c_max = math.sqrt(max(0.0, 1.0 - ratio * ratio))
    c_min = float(np.max(-deviation)) / beta
    return c_min <= c_max + math.sqrt(_MEMBERSHIP_TOL)


def is_member(spec: RiskMeasureSpec, den: DualDensity) -> bool:
    """Dual-set membership for coherent measures."""
    weights = den.weights
    if isinstance(spec, ESSpec):
        return bool(np.max(weights) <= (1.0 / spec.alpha) * (1.0 + _MEMBERSHIP_TOL))
    if isinstance(spec, SpectralSpec):
        return _spectral_member(spec.phi, weights)
    if isinstance(spec, ExpectileSpec):
        return bool(np.max(weights) <= spec.ratio * np.min(weights) + _MEMBERSHIP_TOL)
    if isinstance(spec, MSDSpec):
        return _msd_member(spec.beta, weights)
    raise Unsupported(f"no dual set for measure '{spec.name}'")


def penalty(spec: RiskMeasureSpec, den: DualDensity) -> float:
    """Penalty alpha_rho(Q): 0 or UNBOUNDED for coherent measures, relative entropy for entropic.

    Raises:
        Unsupported: For VaR and ShortfallQuadratic (see `shortfall_penalty`)
    """
    if isinstance(spec, EntropicSpec):
        return float(np.mean(xlogy(den.weights, den.weights))) / spec.gamma
    if isinstance(spec, ShortfallQuadraticSpec):
        raise Unsupported("shortfall penalty is evaluated by shortfall_penalty")
    if not spec.is_coherent:
        raise Unsupported(f"no penalty for measure '{spec.name}'")
    return 0.0 if is_member(spec, den) else UNBOUNDED


def shortfall_penalty(spec: ShortfallQuadraticSpec, den: DualDensity) -> float:
    """sqrt(2 l0) ||dQ/dP||_2 for quadratic shortfall."""
    second = float(np.mean(den.weights * den.weights))
    return math.sqrt(2.0 * spec.l0 * second)


def _any_penalty(spec: RiskMeasureSpec, den: DualDensity) -> float:
    if isinstance(spec, ShortfallQuadraticSpec):
        return shortfall_penalty(spec, den)
    return penalty(spec, den)


def wc_penalty_wasserstein(spec: RiskMeasureSpec, den: DualDensity, norm: PNorm, eps: float) -> float:
    """Penalty of the Wasserstein worst case: alpha_rho(Q) - eps ||dQ/dP||_q."""
    if not (eps >= 0.0):
        raise OutOfRange(f"eps must be >= 0, got {eps}")
    base = _any_penalty(spec, den)
    if is_unbounded(base):
        return UNBOUNDED
    return base - eps * q_norm(den, norm)


def dual_objective(spec: RiskMeasureSpec, d: EmpiricalDistribution, den: DualDensity) -> float:
    """E_Q[-X] - penalty(Q); never exceeds rho(X)."""
    base = _any_penalty(spec, den)
    if is_unbounded(base):
        return -math.inf
    return -den.expectation(d) - base
