"""Empirical distributions with equal atom weights.

A distribution is stored as its sorted atom values; every atom carries
probability 1/n. The sorted vector is simultaneously the empirical quantile
function, which makes the one-dimensional Wasserstein distance between two
distributions with the same atom count an exact vector norm.
"""

import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from robustrisk.services.errors import (
    EmptySample,
    NonFiniteValue,
    OutOfRange,
    UnequalSupportSize,
)

# Guards ceil(u * n) against representation error (0.3 * 10 = 3.0000000000000004)
_QUANTILE_SLACK = 1e-12


@dataclass(frozen=True)
class PNorm:
    """Conjugate exponent pair 1/p + 1/q = 1 with p, q in [1, inf]."""

    p: float
    q: float

    def __post_init__(self):
        if not (self.p >= 1.0):
            raise OutOfRange(f"p must be >= 1, got {self.p}")
        if self.q != _conjugate(self.p):
            raise OutOfRange(f"q={self.q} is not conjugate to p={self.p}")

    @classmethod
    def from_p(cls, p: float) -> "PNorm":
        """Build the pair from p alone.

        Args:
            p: Exponent in [1, inf]

        Returns:
            PNorm with the conjugate q

        Raises:
            OutOfRange: If p < 1 or p is NaN
        """
        p = float(p)
        if math.isnan(p) or p < 1.0:
            raise OutOfRange(f"p must be in [1, inf], got {p}")
        return cls(p=p, q=_conjugate(p))

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.p)


def _conjugate(p: float) -> float:
    if p == 1.0:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    """Sorted finite sample with equal atom weights 1/n."""

    values: np.ndarray

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmpiricalDistribution):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash(self.values.tobytes())

    def __repr__(self) -> str:
        return f"EmpiricalDistribution(n={self.n}, min={self.values[0]:g}, max={self.values[-1]:g})"

    @property
    def is_constant(self) -> bool:
        return bool(self.values[0] == self.values[-1])


SampleLike = Union[Iterable[float], np.ndarray]


def make_distribution(samples: SampleLike) -> EmpiricalDistribution:
    """Build an empirical distribution from raw samples.

    Args:
        samples: Real numbers in any order

    Returns:
        Distribution holding a sorted read-only copy of the samples

    Raises:
        EmptySample: If no samples are given
        NonFiniteValue: If any sample is NaN or infinite
    """
    values = np.array(list(samples) if not isinstance(samples, np.ndarray) else samples,
                      dtype=float).ravel()
    if values.size == 0:
        raise EmptySample("cannot build a distribution from an empty sample")
    if not np.all(np.isfinite(values)):
        raise NonFiniteValue("samples must be finite (no NaN or infinity)")
    values = np.sort(values, kind="stable")
    values.setflags(write=False)
    return EmpiricalDistribution(values=values)


def refine(d: EmpiricalDistribution, factor: int) -> EmpiricalDistribution:
    """Split every atom into `factor` equal sub-atoms (same law, finer grid)."""
    if factor < 1:
        raise OutOfRange(f"refinement factor must be >= 1, got {factor}")
    if factor == 1:
        return d
    return make_distribution(np.repeat(d.values, factor))


def shift(d: EmpiricalDistribution, c: float) -> EmpiricalDistribution:
    """Distribution of X + c."""
    return make_distribution(d.values + float(c))


def scale(d: EmpiricalDistribution, factor: float) -> EmpiricalDistribution:
    """Distribution of factor * X."""
    return make_distribution(d.values * float(factor))


def quantile(d: EmpiricalDistribution, u: float) -> float:
    """Left quantile: smallest x with F(x) >= u.

    Args:
        d: Distribution
        u: Level in (0, 1)

    Returns:
        values[ceil(u * n) - 1]

    Raises:
        OutOfRange: If u is not in (0, 1)
    """
    if not (0.0 < u < 1.0):
        raise OutOfRange(f"quantile level must be in (0, 1), got {u}")
    index = math.ceil(u * d.n - _QUANTILE_SLACK) - 1
    index = min(max(index, 0), d.n - 1)
    return float(d.values[index])


def mean(d: EmpiricalDistribution) -> float:
    return float(np.mean(d.values))


def variance(d: EmpiricalDistribution) -> float:
    """Population variance (1/n convention)."""
    centered = d.values - np.mean(d.values)
    return float(np.mean(centered * centered))


def std(d: EmpiricalDistribution) -> float:
    return math.sqrt(variance(d))


def lp_norm(vector: np.ndarray, p: float) -> float:
    """((1/n) sum |v_i|^p)^(1/p) under equal weights; max |v_i| for p = inf."""
    magnitudes = np.abs(np.asarray(vector, dtype=float))
    if magnitudes.size == 0:
        return 0.0
    if math.isinf(p):
        return float(np.max(magnitudes))
    if p == 1.0:
        return float(np.mean(magnitudes))
    if p == 2.0:
        return float(math.sqrt(np.mean(magnitudes * magnitudes)))
    # Scale out the maximum to keep large p from overflowing
    top = float(np.max(magnitudes))
    if top == 0.0:
        return 0.0
    return top * float(np.mean((magnitudes / top) ** p)) ** (1.0 / p)


def wasserstein_distance(a: EmpiricalDistribution, b: EmpiricalDistribution, norm: PNorm) -> float:
    """p-Wasserstein distance between two distributions with equal atom counts.

    Args:
        a: First distribution
        b: Second distribution
        norm: Exponent pair; only p is used

    Returns:
        Sorted-difference p-norm of the two value vectors

    Raises:
        UnequalSupportSize: If a.n != b.n
    """
    if a.n != b.n:
        raise UnequalSupportSize(f"distributions have {a.n} and {b.n} atoms")
    return lp_norm(a.values - b.values, norm.p)
