"""Brute-force adversarial search over the uncertainty sets.

The oracle maximizes rho(Z) over U_X by projected random-restart hill
climbing and compares the best value found with the closed form. It shares
no code with the closed forms beyond the risk measures themselves and the
maximizer used as one of its seeds.

The search runs on the anchor refined to at least `min_atoms` equal atoms
(same law, finer grid) so that it explores more of the atomless set than
the n-atom closed-form maximizer lives in.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from robustrisk.services import measures, robust
from robustrisk.services.empirical import (
    EmpiricalDistribution,
    PNorm,
    lp_norm,
    make_distribution,
    mean,
    refine,
    std,
)
from robustrisk.services.measures import RiskMeasureSpec
from robustrisk.services.robust import WassersteinBall, WorstCaseResult
from robustrisk.utils.constants import ORACLE_DEFAULTS
from robustrisk.utils.helpers import get_settings
from robustrisk.utils.performance import SearchMetrics, SearchTimer

logger = logging.getLogger(__name__)


class OracleConfig(BaseModel):
    """Search configuration; the seed fully determines the report."""

    model_config = ConfigDict(frozen=True)

    seed: int = Field(ORACLE_DEFAULTS["seed"], ge=0, lt=2**64)
    restarts: int = Field(ORACLE_DEFAULTS["restarts"], gt=0)
    iterations: int = Field(ORACLE_DEFAULTS["iterations"], gt=0)
    step_decay: float = Field(ORACLE_DEFAULTS["step_decay"], gt=0.0, lt=1.0)
    tolerance: float = Field(ORACLE_DEFAULTS["tolerance"], gt=0.0)
    min_atoms: int = Field(default_factory=lambda: get_settings().min_atoms, gt=0)
    threads: int = Field(default_factory=lambda: get_settings().threads, gt=0)


class Verdict(str, Enum):
    CONFIRMED = "CONFIRMED"
    VIOLATED = "VIOLATED"
    SLACK = "SLACK"


@dataclass(frozen=True)
class OracleReport:
    """Outcome of one certification run.

    `allowance` is the closed form's own discretization gap on the searched
    grid; it widens only the SLACK side of the verdict.
    """

    best_value: float
    best_point: EmpiricalDistribution
    closed_form_value: float
    gap: float
    verdict: Verdict
    tolerance: float
    allowance: float
    atoms: int
    restarts: int
    evaluations: int
    seed: int


def decide(best_value: float, closed_form_value: float, tolerance: float,
           allowance: float = 0.0) -> Verdict:
    """Compare the search result with the closed form."""
    if best_value > closed_form_value + tolerance:
        return Verdict.VIOLATED
    if best_value < closed_form_value - tolerance - max(0.0, allowance):
        return Verdict.SLACK
    return Verdict.CONFIRMED


def refinement_factor(n: int, min_atoms: int) -> int:
    """Smallest power of two r with r * n >= min_atoms."""
    factor = 1
    while factor * n < min_atoms:
        factor *= 2
    return factor


# ============================================================================
# SEARCH
# ============================================================================

Projection = Callable[[np.ndarray], np.ndarray]


def _mean_variance_projection(center: float, sigma: float) -> Projection:
    def project(z: np.ndarray) -> np.ndarray:
        centered = z - np.mean(z)
        size = math.sqrt(float(np.mean(centered * centered)))
        if size > sigma:
            centered = centered * (sigma / size)
        return center + centered
    return project


def _ball_projection(anchor: np.ndarray, norm: PNorm, eps: float) -> Projection:
    def project(z: np.ndarray) -> np.ndarray:
        delta = z - anchor
        radius = lp_norm(delta, norm.p)
        if radius > eps:
            delta = delta * (eps / radius)
        return anchor + delta
    return project


def _objective(spec: RiskMeasureSpec) -> Callable[[np.ndarray], float]:
    def value(z: np.ndarray) -> float:
        return measures.evaluate(spec, make_distribution(z))
    return value


def _climb(start: np.ndarray, objective, project: Projection, step: float,
           cfg: OracleConfig, rng: np.random.Generator) -> Tuple[float, np.ndarray, int]:
    current = project(start)
    current_value = objective(current)
    accepted = 0
    streak = 0
    for _ in range(cfg.iterations):
        proposal = project(current + step * rng.standard_normal(current.size))
        proposal_value = objective(proposal)
        if proposal_value > current_value:
            current, current_value = proposal, proposal_value
            accepted += 1
            streak = 0
        else:
            streak += 1
            if streak >= ORACLE_DEFAULTS["rejection_streak"]:
                step *= cfg.step_decay
                streak = 0
    return current_value, np.sort(current), accepted


def _search(spec: RiskMeasureSpec, seeds: List[np.ndarray], project: Projection, step: float,
            cfg: OracleConfig) -> Tuple[float, np.ndarray, int]:
    """Run all restarts and merge them independently of completion order."""
    objective = _objective(spec)
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)
    metrics = SearchMetrics()
    anchor = seeds[1] if len(seeds) > 1 else seeds[0]

    def restart(index: int) -> Tuple[float, np.ndarray]:
        rng = np.random.default_rng(children[index])
        if index < len(seeds):
            start = seeds[index]
        else:
            start = anchor + step * rng.standard_normal(anchor.size)
        with SearchTimer() as timer:
            value, point, accepted = _climb(start, objective, project, step, cfg, rng)
        metrics.record_restart(index, accepted, cfg.iterations + 1, value, timer.duration)
        return value, point

    if cfg.threads > 1 and cfg.restarts > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            outcomes = list(pool.map(restart, range(cfg.restarts)))
    else:
        outcomes = [restart(index) for index in range(cfg.restarts)]

    best_value, best_point = min(outcomes, key=lambda item: (-item[0], tuple(item[1].tolist())))
    logger.info("[ORACLE] %s search: %s", spec.name, metrics.get_summary())
    return best_value, best_point, metrics.total_evaluations()


def _report(spec: RiskMeasureSpec, result: WorstCaseResult, best_value: float,
            best_point: np.ndarray, evaluations: int, cfg: OracleConfig) -> OracleReport:
    verdict = decide(best_value, result.value, cfg.tolerance, result.discretization_gap)
    report = OracleReport(
        best_value=float(best_value),
        best_point=make_distribution(best_point),
        closed_form_value=float(result.value),
        gap=float(result.value - best_value),
        verdict=verdict,
        tolerance=cfg.tolerance,
        allowance=max(0.0, float(result.discretization_gap)),
        atoms=int(best_point.size),
        restarts=cfg.restarts,
        evaluations=evaluations,
        seed=cfg.seed,
    )
    if verdict is not Verdict.CONFIRMED:
        logger.warning("[ORACLE] %s: %s (closed form %.12g, search %.12g)", spec.name,
                       verdict.value, report.closed_form_value, report.best_value)
    return report


def _degenerate(spec, result, anchor: EmpiricalDistribution, cfg: OracleConfig) -> OracleReport:
    """The uncertainty set is {X}: nothing to search."""
    value = measures.evaluate(spec, anchor)
    return _report(spec, result, value, anchor.values.copy(), 1, cfg)


def oracle_mean_variance(spec: RiskMeasureSpec, d: EmpiricalDistribution,
                         cfg: Optional[OracleConfig] = None) -> OracleReport:
    """Search {Z : E[Z] = E[X], sigma(Z) <= sigma(X)} and compare with the closed form.

    Args:
        spec: Measure with a mean-variance closed form
        d: Anchor distribution
        cfg: Search configuration

    Returns:
        OracleReport with verdict
    """
    cfg = cfg or OracleConfig()
    anchor = refine(d, refinement_factor(d.n, cfg.min_atoms))
    result = robust.wc_mean_variance(spec, anchor)
    center, sigma = mean(anchor), std(anchor)
    if sigma == 0.0:
        return _degenerate(spec, result, anchor, cfg)
    seeds = [np.array(result.argmax.values), np.array(anchor.values)]
    best_value, best_point, evaluations = _search(
        spec, seeds, _mean_variance_projection(center, sigma), sigma / 4.0, cfg
    )
    return _report(spec, result, best_value, best_point, evaluations, cfg)


def oracle_wasserstein(spec: RiskMeasureSpec, d: EmpiricalDistribution, norm: PNorm, eps: float,
                       cfg: Optional[OracleConfig] = None) -> OracleReport:
    """Search the p-Wasserstein ball of radius eps and compare with rho + eps M.

    On sorted vectors of equal length the ball constraint is the p-norm of
    the coordinate differences; any coupling bound also bounds d_Wp.
    """
    cfg = cfg or OracleConfig()
    ball = WassersteinBall(norm=norm, eps=float(eps))
    anchor = refine(d, refinement_factor(d.n, cfg.min_atoms))
    result = robust.wc_wasserstein(spec, anchor, norm, ball.eps)
    if ball.eps == 0.0:
        return _degenerate(spec, result, anchor, cfg)
    spike = np.array(anchor.values)
    spike[0] -= ball.eps if norm.is_infinite else ball.eps * anchor.n ** (1.0 / norm.p)
    seeds = [np.array(result.argmax.values), np.array(anchor.values), spike]
    best_value, best_point, evaluations = _search(
        spec, seeds, _ball_projection(np.array(anchor.values), norm, ball.eps), ball.eps / 4.0, cfg
    )
    return _report(spec, result, best_value, best_point, evaluations, cfg)


def certify(result: WorstCaseResult, report: OracleReport) -> WorstCaseResult:
    """Attach an oracle verdict to a closed-form result."""
    return replace(result, certified=report.verdict is Verdict.CONFIRMED, oracle_gap=report.gap)
