"""
audit.py: Hypothesis tests on a prover's success probability from a sample of challenge
outcomes. H0: succ <= (omega-1)/gamma against H1: succ >= omega/gamma, where omega is the
smallest count of correct responses over the whole challenge space that guarantees extraction.

Tails use scipy.stats; without-replacement tails are exact rationals up to a configurable
sample size so that reject/accept boundaries never flip on rounding.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, NamedTuple

from scipy.stats import beta, binom, hypergeom

from .analysis import ThresholdReport
from .errors import ParameterError
from .schemes import SchemeKind

logger = logging.getLogger(__name__)

EXACT_LIMIT = 1000

# Published reject marks keyed by (p0, t, g): (at alpha=0.05, at alpha=0.01).
PUBLISHED_REJECTIONS: dict[tuple[float, int, int], tuple[bool, bool]] = {
    (0.8, 100, 100): (True, True),
    (0.8, 100, 95): (True, True),
    (0.8, 100, 90): (False, False),
    (0.8, 100, 85): (False, False),
    (0.8, 100, 80): (False, False),
    (0.8, 200, 180): (True, True),
    (0.8, 200, 175): (True, True),
    (0.8, 200, 170): (True, False),
    (0.8, 200, 165): (False, False),
    (0.8, 200, 160): (False, False),
    (0.8, 500, 435): (True, True),
    (0.8, 500, 430): (True, True),
    (0.8, 500, 425): (True, True),
    (0.8, 500, 420): (True, False),
    (0.8, 500, 415): (False, False),
    (0.9, 100, 100): (True, True),
    (0.9, 100, 95): (False, False),
    (0.9, 100, 90): (False, False),
    (0.9, 100, 85): (False, False),
    (0.9, 100, 80): (False, False),
    (0.9, 200, 200): (True, True),
    (0.9, 200, 195): (True, True),
    (0.9, 200, 190): (True, True),
    (0.9, 200, 185): (False, False),
    (0.9, 200, 180): (False, False),
    (0.9, 500, 480): (True, True),
    (0.9, 500, 475): (True, True),
    (0.9, 500, 470): (True, True),
    (0.9, 500, 465): (True, False),
    (0.9, 500, 460): (False, False),
}


class Sampling(str, Enum):
    WITH_REPLACEMENT = "with"
    WITHOUT_REPLACEMENT = "without"


class Decision(str, Enum):
    REJECT_H0 = "reject_H0"
    INSUFFICIENT_EVIDENCE = "insufficient_evidence"


@dataclass(frozen=True)
class AuditSample:
    t: int
    g: int
    sampling: Sampling
    gamma: int
    omega: int

    def __post_init__(self):
        object.__setattr__(self, "sampling", Sampling(self.sampling))
        if self.t < 1:
            raise ParameterError(f"t must be positive, got {self.t}")
        if not 0 <= self.g <= self.t:
            raise ParameterError(f"g={self.g} outside [0, t={self.t}]")
        if not 1 <= self.omega <= self.gamma:
            raise ParameterError(f"omega={self.omega} outside [1, gamma={self.gamma}]")
        if self.sampling == Sampling.WITHOUT_REPLACEMENT and self.t > self.gamma:
            raise ParameterError(f"Sampling without replacement needs t <= gamma, got t={self.t}")

    @property
    def p0(self) -> Fraction:
        return Fraction(self.omega - 1, self.gamma)


@dataclass(frozen=True)
class AuditReport:
    sample: AuditSample
    p_value: float
    alpha: float
    decision: Decision
    theta_L: float
    confidence_level: float
    degenerate: bool = False
    rules_agree: bool = True
    advice: str | None = None
    failures: tuple[int, ...] = field(default_factory=tuple)

    @property
    def rejected(self) -> bool:
        return self.decision == Decision.REJECT_H0


class ConfidenceBound(NamedTuple):
    theta_l: float
    degenerate: bool


class PlanRow(NamedTuple):
    t: int
    critical_g: int
    power: float


class SamplePlan(NamedTuple):
    t: int | None
    rows: list[PlanRow]


class RejectionRow(NamedTuple):
    p0: float
    t: int
    g: int
    p_value: float
    rejects: tuple[bool, ...]
    published: tuple[bool, ...] | None

    @property
    def mismatch(self) -> bool:
        return self.published is not None and self.published != self.rejects


def _check_counts(t: int, g: int) -> None:
    if t < 1 or not 0 <= g <= t:
        raise ParameterError(f"Need t >= 1 and 0 <= g <= t, got t={t}, g={g}")


def pvalue_without_replacement(gamma: int, omega: int, t: int, g: int,
                               exact_limit: int = EXACT_LIMIT) -> float:
    """
    P(at least g correct among t distinct challenges) when exactly omega-1 of the gamma
    challenges are answered correctly.
    """
    _check_counts(t, g)
    if not 1 <= omega <= gamma or t > gamma:
        raise ParameterError(f"Need 1 <= omega <= gamma and t <= gamma; got gamma={gamma}, "
                             f"omega={omega}, t={t}")
    good = omega - 1
    if t <= exact_limit:
        total = sum(math.comb(good, i) * math.comb(gamma - good, t - i) for i in range(g, t + 1))
        return float(Fraction(total, math.comb(gamma, t)))
    return float(hypergeom.sf(g - 1, gamma, good, t))


def pvalue_with_replacement(p0: float, t: int, g: int) -> float:
    """
    Binomial upper tail P(X >= g), X ~ Bin(t, p0), that is the sum over i >= g of
    C(t, i) p0^i (1 - p0)^(t - i). binom.sf evaluates it through the regularised incomplete
    beta function, so small tails keep full relative precision with no 1 - cdf cancellation.
    """
    _check_counts(t, g)
    if not 0 <= p0 <= 1:
        raise ParameterError(f"p0 must lie in [0, 1], got {p0}")
    if g == 0:
        return 1.0
    return float(binom.sf(g - 1, t, float(p0)))


def lower_conf_bound(t: int, g: int, confidence: float = 0.95) -> ConfidenceBound:
    """
    theta_L with P(X >= g | theta_L) = 1 - confidence. The binomial tail equals the regularised
    incomplete beta function I_theta(g, t-g+1), so theta_L is a beta quantile.
    g = 0 gives the degenerate bound 0.
    """
    _check_counts(t, g)
    if not 0 < confidence < 1:
        raise ParameterError(f"confidence must lie in (0, 1), got {confidence}")
    if g == 0:
        logger.warning("No correct responses in %d challenges; the lower bound is degenerate", t)
        return ConfidenceBound(0.0, True)
    return ConfidenceBound(float(beta.ppf(1 - confidence, g, t - g + 1)), False)


def lower_conf_bound_without_replacement(gamma: int, t: int, g: int,
                                         confidence: float = 0.95) -> tuple[int, bool]:
    """
    Largest j such that a prover correct on exactly j of the gamma challenges shows at least
    g correct in t draws with probability below 1 - confidence. Returns (j, degenerate).
    """
    _check_counts(t, g)
    level = 1 - confidence
    if pvalue_without_replacement(gamma, 1, t, g) >= level:
        return 0, True
    low, high = 0, gamma - 1
    while low < high:
        middle = (low + high + 1) // 2
        if pvalue_without_replacement(gamma, middle + 1, t, g) < level:
            low = middle
        else:
            high = middle - 1
    return low, False


def omega_from_threshold(threshold: Fraction, gamma: int) -> int:
    """Smallest omega with omega/gamma strictly above the threshold."""
    return math.floor(Fraction(threshold) * gamma) + 1


def basic_omega_published(n: int, d: int) -> int:
    """n - floor(d/2) + 1, the published form for the basic scheme."""
    return n - d // 2 + 1


def omega_for(report: ThresholdReport) -> int:
    omega = omega_from_threshold(report.threshold, report.gamma)
    if report.kind == SchemeKind.BASIC:
        published = basic_omega_published(report.n, report.d)
        if published != omega:
            logger.warning("Basic omega forms differ (%d from the threshold, %d published); using %d",
                           omega, published, max(omega, published))
        omega = max(omega, published)
    return min(omega, report.gamma)


def audit_decision(sample: AuditSample, alpha: float = 0.05,
                   confidence: float | None = None) -> AuditReport:
    """
    Reject H0 iff the p-value is below alpha. The confidence-bound rule (reject iff
    (omega-1)/gamma < theta_L) is evaluated alongside and must agree when confidence = 1 - alpha.
    """
    if not 0 < alpha < 1:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    confidence = 1 - alpha if confidence is None else confidence
    if sample.sampling == Sampling.WITH_REPLACEMENT:
        p_value = pvalue_with_replacement(float(sample.p0), sample.t, sample.g)
        bound = lower_conf_bound(sample.t, sample.g, confidence)
        theta_l, degenerate = bound.theta_l, bound.degenerate
        bound_rejects = not degenerate and float(sample.p0) < theta_l
    else:
        p_value = pvalue_without_replacement(sample.gamma, sample.omega, sample.t, sample.g)
        j_l, degenerate = lower_conf_bound_without_replacement(sample.gamma, sample.t, sample.g, confidence)
        theta_l = j_l / sample.gamma
        bound_rejects = not degenerate and sample.omega - 1 <= j_l
    decision = Decision.REJECT_H0 if p_value < alpha else Decision.INSUFFICIENT_EVIDENCE
    rules_agree = True
    if math.isclose(confidence, 1 - alpha):
        rules_agree = bound_rejects == (decision == Decision.REJECT_H0)
        if not rules_agree:
            logger.warning("p-value rule and confidence-bound rule disagree (p=%.6g, theta_L=%.6g)",
                           p_value, theta_l)
    advice = None
    if decision == Decision.INSUFFICIENT_EVIDENCE:
        next_t = 2 * sample.t
        if sample.sampling == Sampling.WITHOUT_REPLACEMENT:
            next_t = min(next_t, sample.gamma)
        advice = f"evidence insufficient; consider re-auditing with t={next_t}"
    logger.info("Audit t=%d g=%d p=%.6g alpha=%s -> %s", sample.t, sample.g, p_value, alpha, decision.value)
    return AuditReport(sample, p_value, alpha, decision, theta_l, confidence,
                       degenerate, rules_agree, advice)


def min_sample_all_correct(p0: float, alpha: float) -> int:
    """Smallest t with p0^t < alpha."""
    if not 0 < p0 < 1 or not 0 < alpha < 1:
        raise ParameterError(f"p0 and alpha must lie in (0, 1), got {p0}, {alpha}")
    return math.floor(math.log(alpha) / math.log(p0)) + 1


def critical_count(p0: float, t: int, alpha: float) -> int:
    """Smallest g whose with-replacement p-value is below alpha (t + 1 if none is)."""
    g = max(int(binom.isf(alpha, t, p0)), 0)
    while g <= t and pvalue_with_replacement(p0, t, g) >= alpha:
        g += 1
    while g > 0 and pvalue_with_replacement(p0, t, g - 1) < alpha:
        g -= 1
    return g


def plan_sample_size(p0: float, p1: float, alpha: float, power: float,
                     t_grid: Iterable[int] = range(10, 2001, 10)) -> SamplePlan:
    """
    For each t, the probability that a prover with success p1 reaches the critical count.
    Returns the smallest t on the grid reaching the requested power, and every row.
    """
    if not 0 <= p0 < p1 <= 1:
        raise ParameterError(f"Need 0 <= p0 < p1 <= 1, got p0={p0}, p1={p1}")
    if not 0 < power < 1:
        raise ParameterError(f"power must lie in (0, 1), got {power}")
    rows = []
    chosen = None
    for t in t_grid:
        g = critical_count(p0, t, alpha)
        reached = 0.0 if g > t else pvalue_with_replacement(p1, t, g)
        rows.append(PlanRow(t, g, reached))
        if chosen is None and reached >= power:
            chosen = t
    return SamplePlan(chosen, rows)


def rejection_table(alphas: tuple[float, ...] = (0.05, 0.01),
                    cells: Iterable[tuple[float, int, int]] | None = None) -> list[RejectionRow]:
    """Regenerate reject marks (with replacement) next to the published ones."""
    rows = []
    for p0, t, g in (cells if cells is not None else PUBLISHED_REJECTIONS):
        p_value = pvalue_with_replacement(p0, t, g)
        published = PUBLISHED_REJECTIONS.get((p0, t, g))
        if published is not None and len(published) != len(alphas):
            published = None
        row = RejectionRow(p0, t, g, p_value, tuple(p_value < a for a in alphas), published)
        if row.mismatch:
            logger.warning("p0=%s t=%d g=%d: p=%.4g gives %s, published %s",
                           p0, t, g, p_value, row.rejects, published)
        rows.append(row)
    return rows
