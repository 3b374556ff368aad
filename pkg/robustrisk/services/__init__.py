"""Computation services: distributions, measures, duality, worst cases and the oracle."""

from robustrisk.services.empirical import EmpiricalDistribution, PNorm, make_distribution
from robustrisk.services.measures import (
    ESSpec,
    EntropicSpec,
    ExpectileSpec,
    MSDSpec,
    ShortfallQuadraticSpec,
    SpectralFunction,
    SpectralSpec,
    VaRSpec,
    evaluate,
)
from robustrisk.services.robust import MeanVariance, WassersteinBall, worst_case

__all__ = [
    "EmpiricalDistribution",
    "PNorm",
    "make_distribution",
    "ESSpec",
    "EntropicSpec",
    "ExpectileSpec",
    "MSDSpec",
    "ShortfallQuadraticSpec",
    "SpectralFunction",
    "SpectralSpec",
    "VaRSpec",
    "evaluate",
    "MeanVariance",
    "WassersteinBall",
    "worst_case",
]
