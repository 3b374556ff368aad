"""Law-invariant convex risk measures on empirical distributions.

Sign convention: X is a monetary outcome (a return, larger is better) and
rho(X) is the capital needed to make X acceptable, so rho(X + c) = rho(X) - c.
"""

import math
from dataclasses import dataclass, field
from typing import ClassVar, Dict, List, Sequence, Tuple

import numpy as np
from scipy.optimize import bisect
from scipy.special import logsumexp

from robustrisk.services.empirical import EmpiricalDistribution, quantile
from robustrisk.services.errors import (
    AlphaTooSmallForSample,
    InvalidSpectrum,
    OutOfRange,
    Unsupported,
)
from robustrisk.utils.constants import TOLERANCES

ROOT_XTOL = TOLERANCES["root"]
_SNAP = 1e-9


# ============================================================================
# SPECTRAL FUNCTIONS
# ============================================================================


@dataclass(frozen=True, eq=False)
class SpectralFunction:
    """Right-continuous non-increasing step density phi on [0, 1].

    Segment k covers [starts[k], starts[k+1]) (the last one ends at 1) and
    carries the level levels[k].
    """

    starts: np.ndarray
    levels: np.ndarray
    _knots: np.ndarray = field(init=False, repr=False)
    _cumulative: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        starts = np.asarray(self.starts, dtype=float)
        levels = np.asarray(self.levels, dtype=float)
        if starts.ndim != 1 or starts.shape != levels.shape or starts.size == 0:
            raise InvalidSpectrum("spectrum needs one level per segment start")
        if starts[0] != 0.0:
            raise InvalidSpectrum("spectrum must start at u = 0")
        knots = np.append(starts, 1.0)
        widths = np.diff(knots)
        if np.any(widths <= 0.0):
            raise InvalidSpectrum("spectrum segments must be increasing and end before u = 1")
        if not np.all(np.isfinite(levels)) or np.any(levels < 0.0):
            raise InvalidSpectrum("spectrum levels must be finite and non-negative")
        if np.any(np.diff(levels) > 0.0):
            raise InvalidSpectrum("spectrum must be non-increasing")
        cumulative = np.concatenate(([0.0], np.cumsum(widths * levels)))
        if abs(cumulative[-1] - 1.0) > TOLERANCES["spectrum_integral"]:
            raise InvalidSpectrum(f"spectrum must integrate to 1, got {cumulative[-1]:.15g}")
        for name, array in (("starts", starts), ("levels", levels), ("_knots", knots),
                            ("_cumulative", cumulative)):
            array.setflags(write=False)
            object.__setattr__(self, name, array)

    # === Constructors ===

    @classmethod
    def from_intervals(cls, rows: Sequence[Tuple[float, float, float]]) -> "SpectralFunction":
        """Build from contiguous (u_start, u_end, phi) rows covering [0, 1].

        Raises:
            InvalidSpectrum: If the rows leave gaps, overlap or miss the ends
        """
        if not rows:
            raise InvalidSpectrum("spectrum has no rows")
        ordered = sorted((float(a), float(b), float(v)) for a, b, v in rows)
        for (_, end, _), (start, _, _) in zip(ordered, ordered[1:]):
            if abs(end - start) > _SNAP:
                raise InvalidSpectrum(f"spectrum rows are not contiguous at u = {end:g}")
        if abs(ordered[-1][1] - 1.0) > _SNAP:
            raise InvalidSpectrum("spectrum must end at u = 1")
        return cls(starts=np.array([row[0] for row in ordered]),
                   levels=np.array([row[2] for row in ordered]))

    @classmethod
    def expected_shortfall(cls, alpha: float) -> "SpectralFunction":
        """phi = (1/alpha) on (0, alpha), zero afterwards."""
        _check_open_unit("alpha", alpha)
        return cls(starts=np.array([0.0, alpha]), levels=np.array([1.0 / alpha, 0.0]))

    @classmethod
    def uniform(cls) -> "SpectralFunction":
        """phi = 1, the expectation case."""
        return cls(starts=np.array([0.0]), levels=np.array([1.0]))

    # === Integrals ===

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self._knots)

    def cumulative(self, u):
        """Integral of phi over [0, u]; exact because phi is a step function."""
        return np.interp(u, self._knots, self._cumulative)

    def cell_masses(self, n: int) -> np.ndarray:
        """Integral of phi over each cell [i/n, (i+1)/n)."""
        grid = np.arange(n + 1, dtype=float) / n
        return np.diff(self.cumulative(grid))

    def norm(self, q: float) -> float:
        """Exact L^q norm of phi on [0, 1]."""
        widths = self.widths
        if math.isinf(q):
            return float(np.max(self.levels[widths > 0.0]))
        if q == 1.0:
            return float(np.sum(widths * self.levels))
        # Scaled by the top level so large q (p near 1) cannot overflow
        top = float(np.max(self.levels[widths > 0.0]))
        if top == 0.0:
            return 0.0
        return top * float(np.sum(widths * (self.levels / top) ** q)) ** (1.0 / q)

    def centered_two_norm(self) -> float:
        """Exact ||phi - 1||_2."""
        return math.sqrt(float(np.sum(self.widths * (self.levels - 1.0) ** 2)))

    def rows(self) -> List[Tuple[float, float, float]]:
        return [(float(a), float(b), float(v))
                for a, b, v in zip(self._knots[:-1], self._knots[1:], self.levels)]

    def __eq__(self, other) -> bool:
        if not isinstance(other, SpectralFunction):
            return NotImplemented
        return np.array_equal(self.starts, other.starts) and np.array_equal(self.levels, other.levels)

    def __hash__(self) -> int:
        return hash((self.starts.tobytes(), self.levels.tobytes()))


# ============================================================================
# MEASURE DEFINITIONS
# ============================================================================


def _check_open_unit(name: str, value: float):
    if not (0.0 < value < 1.0):
        raise OutOfRange(f"{name} must be in (0, 1), got {value}")


class RiskMeasureSpec:
    """Tagged description of a base risk measure and its parameters."""

    name: ClassVar[str] = ""
    is_coherent: ClassVar[bool] = False

    def params(self) -> Dict[str, float]:
        """Scalar parameters for reporting."""
        return {}


@dataclass(frozen=True)
class VaRSpec(RiskMeasureSpec):
    alpha: float
    name: ClassVar[str] = "var"
    # positively homogeneous and monetary, but not convex
    is_coherent: ClassVar[bool] = False

    def __post_init__(self):
        _check_open_unit("alpha", self.alpha)

    def params(self):
        return {"alpha": self.alpha}


@dataclass(frozen=True)
class ESSpec(RiskMeasureSpec):
    alpha: float
    name: ClassVar[str] = "es"
    is_coherent: ClassVar[bool] = True

    def __post_init__(self):
        _check_open_unit("alpha", self.alpha)

    def params(self):
        return {"alpha": self.alpha}

    @property
    def spectrum(self) -> SpectralFunction:
        return SpectralFunction.expected_shortfall(self.alpha)


@dataclass(frozen=True)
class SpectralSpec(RiskMeasureSpec):
    phi: SpectralFunction
    name: ClassVar[str] = "spectral"
    is_coherent: ClassVar[bool] = True

    def __post_init__(self):
        if not isinstance(self.phi, SpectralFunction):
            raise InvalidSpectrum("spectral measure needs a SpectralFunction")

    def params(self):
        return {"segments": len(self.phi.levels)}

    @property
    def spectrum(self) -> SpectralFunction:
        return self.phi


@dataclass(frozen=True)
class ExpectileSpec(RiskMeasureSpec):
    alpha: float
    name: ClassVar[str] = "expectile"
    is_coherent: ClassVar[bool] = True

    def __post_init__(self):
        if not (0.0 < self.alpha <= 0.5):
            raise OutOfRange(f"alpha must be in (0, 0.5], got {self.alpha}")

    def params(self):
        return {"alpha": self.alpha}

    @property
    def ratio(self) -> float:
        """(1 - alpha) / alpha, the bound on max/min of dual densities."""
        return (1.0 - self.alpha) / self.alpha


@dataclass(frozen=True)
class MSDSpec(RiskMeasureSpec):
    beta: float
    name: ClassVar[str] = "msd"
    is_coherent: ClassVar[bool] = True

    def __post_init__(self):
        if not (0.0 <= self.beta <= 1.0):
            raise OutOfRange(f"beta must be in [0, 1], got {self.beta}")

    def params(self):
        return {"beta": self.beta}


@dataclass(frozen=True)
class EntropicSpec(RiskMeasureSpec):
    gamma: float
    name: ClassVar[str] = "entropic"
    is_coherent: ClassVar[bool] = False

    def __post_init__(self):
        if not (self.gamma > 0.0) or math.isinf(self.gamma):
            raise OutOfRange(f"gamma must be > 0, got {self.gamma}")

    def params(self):
        return {"gamma": self.gamma}


@dataclass(frozen=True)
class ShortfallQuadraticSpec(RiskMeasureSpec):
    l0: float
    name: ClassVar[str] = "shortfall"
    is_coherent: ClassVar[bool] = False

    def __post_init__(self):
        if not (self.l0 > 0.0) or math.isinf(self.l0):
            raise OutOfRange(f"l0 must be > 0, got {self.l0}")

    def params(self):
        return {"l0": self.l0}


# ============================================================================
# EVALUATION
# ============================================================================


def var(d: EmpiricalDistribution, alpha: float) -> float:
    """Value at risk: -F^{-1}(alpha) with the left quantile."""
    _check_open_unit("alpha", alpha)
    return -quantile(d, alpha)


def tail_split(alpha: float, n: int) -> Tuple[int, float]:
    """Whole tail atoms and the fractional weight of the boundary atom for alpha * n.

    Raises:
        AlphaTooSmallForSample: If alpha * n < 1
    """
    m = alpha * n
    if abs(m - round(m)) < _SNAP:
        m = float(round(m))
    if m < 1.0:
        raise AlphaTooSmallForSample(
            f"alpha * n = {alpha * n:g} < 1; need at least one full tail atom (n={n})"
        )
    whole = int(math.floor(m))
    return whole, m - whole


def es(d: EmpiricalDistribution, alpha: float) -> float:
    """Expected shortfall: average of the lower alpha-tail, boundary atom fractional."""
    _check_open_unit("alpha", alpha)
    whole, fraction = tail_split(alpha, d.n)
    total = float(np.sum(d.values[:whole]))
    if fraction > 0.0:
        total += fraction * float(d.values[whole])
    return -total / (alpha * d.n)


def spectral(d: EmpiricalDistribution, phi: SpectralFunction) -> float:
    """Spectral risk: sum_i (-values[i]) * integral of phi over cell i."""
    return float(-np.dot(d.values, phi.cell_masses(d.n)))


def _expectile_point(values: np.ndarray, alpha: float) -> float:
    """Solve alpha E[(X-e)^+] = (1-alpha) E[(e-X)^+] for e."""
    lo, hi = float(values[0]), float(values[-1])
    if lo == hi:
        return lo

    def gap(e: float) -> float:
        return float(alpha * np.sum(np.maximum(values - e, 0.0))
                     - (1.0 - alpha) * np.sum(np.maximum(e - values, 0.0)))

    root = bisect(gap, lo, hi, xtol=ROOT_XTOL)
    # The condition is linear between consecutive atoms: solve it exactly there
    n = values.size
    prefix = np.concatenate(([0.0], np.cumsum(values)))
    for below in {int(np.searchsorted(values, root, side="left")),
                  int(np.searchsorted(values, root, side="right"))}:
        if below == 0 or below == n:
            continue
        sum_low, sum_high = prefix[below], prefix[n] - prefix[below]
        exact = (alpha * sum_high + (1.0 - alpha) * sum_low) / (alpha * (n - below) + (1.0 - alpha) * below)
        if values[below - 1] - ROOT_XTOL <= exact <= values[below] + ROOT_XTOL:
            return float(exact)
    return float(root)


def expectile(d: EmpiricalDistribution, alpha: float) -> float:
    """Expectile risk measure -e_alpha(X) for alpha in (0, 1/2]."""
    if not (0.0 < alpha <= 0.5):
        raise OutOfRange(f"alpha must be in (0, 0.5], got {alpha}")
    return -_expectile_point(d.values, alpha)


def expectile_point(d: EmpiricalDistribution, alpha: float) -> float:
    """The expectile e_alpha(X) itself."""
    return -expectile(d, alpha)


def msd(d: EmpiricalDistribution, beta: float) -> float:
    """Mean plus beta times the lower semi-deviation."""
    if not (0.0 <= beta <= 1.0):
        raise OutOfRange(f"beta must be in [0, 1], got {beta}")
    center = float(np.mean(d.values))
    downside = np.minimum(d.values - center, 0.0)
    return -center + beta * math.sqrt(float(np.mean(downside * downside)))


def entropic(d: EmpiricalDistribution, gamma: float) -> float:
    """(1/gamma) log E[exp(-gamma X)] via log-sum-exp."""
    if not (gamma > 0.0):
        raise OutOfRange(f"gamma must be > 0, got {gamma}")
    return float((logsumexp(-gamma * d.values) - math.log(d.n)) / gamma)


def shortfall_level(d: EmpiricalDistribution, m: float) -> float:
    """E[l(-X - m)] with l(x) = x^2/2 for x >= 0."""
    excess = np.maximum(-d.values - m, 0.0)
    return 0.5 * float(np.mean(excess * excess))


def shortfall_quadratic(d: EmpiricalDistribution, l0: float) -> float:
    """Utility-based shortfall risk inf{m : E[l(-X - m)] <= l0}.

    The constraint is continuous and non-increasing in m; the root is
    bracketed by [-max - 2 sqrt(2 l0), -min], refined by bisection and then
    solved exactly on the quadratic piece that contains it.
    """
    if not (l0 > 0.0):
        raise OutOfRange(f"l0 must be > 0, got {l0}")
    values = d.values
    reach = math.sqrt(2.0 * l0)
    lo = -float(values[-1]) - 2.0 * reach
    hi = -float(values[0])
    root = bisect(lambda m: shortfall_level(d, m) - l0, lo, hi, xtol=ROOT_XTOL)

    n = d.n
    prefix = np.concatenate(([0.0], np.cumsum(values)))
    prefix_sq = np.concatenate(([0.0], np.cumsum(values * values)))
    for count in {int(np.searchsorted(values, -root, side="left")),
                  int(np.searchsorted(values, -root, side="right"))}:
        if count == 0:
            continue
        # sum over the `count` largest losses L = -values of (L - m)^2 = 2 n l0
        s1 = -prefix[count]
        s2 = prefix_sq[count]
        disc = s1 * s1 - count * (s2 - 2.0 * n * l0)
        if disc < 0.0:
            continue
        exact = (s1 - math.sqrt(disc)) / count
        upper = -float(values[count - 1])
        lower = -float(values[count]) if count < n else -math.inf
        if lower - ROOT_XTOL <= exact <= upper + ROOT_XTOL:
            return float(exact)
    return float(root)


def evaluate(spec: RiskMeasureSpec, d: EmpiricalDistribution) -> float:
    """Evaluate any supported measure.

    Args:
        spec: Measure and parameters
        d: Distribution

    Returns:
        rho(X)

    Raises:
        Unsupported: For an unknown spec type
    """
    if isinstance(spec, VaRSpec):
        return var(d, spec.alpha)
    if isinstance(spec, ESSpec):
        return es(d, spec.alpha)
    if isinstance(spec, SpectralSpec):
        return spectral(d, spec.phi)
    if isinstance(spec, ExpectileSpec):
        return expectile(d, spec.alpha)
    if isinstance(spec, MSDSpec):
        return msd(d, spec.beta)
    if isinstance(spec, EntropicSpec):
        return entropic(d, spec.gamma)
    if isinstance(spec, ShortfallQuadraticSpec):
        return shortfall_quadratic(d, spec.l0)
    raise Unsupported(f"unknown risk measure {type(spec).__name__}")


def is_acceptable(spec: RiskMeasureSpec, d: EmpiricalDistribution) -> bool:
    """Membership in the acceptance set {X : rho(X) <= 0}."""
    return evaluate(spec, d) <= 0.0
