"""
analysis.py: Closed-form response-code distances, extraction thresholds and the
sufficient-length solver, each paired with an exact or brute-force counterpart where
enumeration is feasible. All counts use exact big-integer arithmetic.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Literal, NamedTuple

from .coding import LinearCode, minimum_distance, nonzero_weights
from .errors import ParameterError, TooLargeToEnumerate
from .models.limits_model import DEFAULT_LIMITS, Limits
from .schemes import SchemeDescriptor, SchemeKind, build_response_code, challenge_count

logger = logging.getLogger(__name__)

Method = Literal["exact", "estimate"]

# Sufficient lengths as published, keyed by (ell, d, succ): (exact criterion, estimate criterion).
# Kept verbatim, including cells that do not reproduce; max_n_table flags those.
PUBLISHED_MAX_N: dict[tuple[int, int, float], tuple[int, int]] = {
    (10000, 10000, 0.6): (62143493, 62133493),
    (10000, 10000, 0.7): (109145666, 109135666),
    (10000, 10000, 0.8): (195771518, 195761518),
    (10000, 10000, 0.9): (448152011, 448142011),
    (10000, 10000, 0.99): (4949841645, 4949831645),
    (10000, 1000, 0.6): (6218850, 6213349),
    (10000, 1000, 0.7): (10919066, 10913566),
    (10000, 1000, 0.8): (19581651, 19576151),
    (10000, 1000, 0.9): (44819701, 44814201),
    (10000, 1000, 0.99): (494988664, 494983164),
    (10000, 100, 0.6): (626398, 621334),
    (10000, 100, 0.7): (1096413, 1091356),
    (10000, 100, 0.8): (1962668, 1957615),
    (10000, 100, 0.9): (4486471, 4481420),
    (10000, 100, 0.99): (4950336, 49498316),
    (10000, 10, 0.6): (67272, 62133),
    (10000, 10, 0.7): (114216, 109136),
    (10000, 10, 0.8): (200808, 195761),
    (10000, 10, 0.9): (453165, 448142),
    (10000, 10, 0.99): (4954838, 4949832),
    (1000, 10000, 0.6): (6218850, 6213349),
    (1000, 10000, 0.7): (10919066, 10913567),
    (1000, 10000, 0.8): (19581651, 19576152),
    (1000, 10000, 0.9): (44819700, 44814201),
    (1000, 10000, 0.99): (494988664, 494983164),
    (1000, 1000, 0.6): (622334, 6213349),
    (1000, 1000, 0.7): (1092356, 10913567),
    (1000, 1000, 0.8): (1958614, 19576152),
    (1000, 1000, 0.9): (4482419, 4481420),
    (1000, 1000, 0.99): (49499315, 49498316),
    (1000, 100, 0.6): (62684, 62133),
    (1000, 100, 0.7): (109685, 109135),
    (1000, 100, 0.8): (196311, 195761),
    (1000, 100, 0.9): (448692, 448142),
    (1000, 100, 0.99): (4950381, 4949831),
    (1000, 10, 0.6): (6731, 6213),
    (1000, 10, 0.7): (11425, 10914),
    (1000, 10, 0.8): (20084, 19576),
    (1000, 10, 0.9): (45320, 44814),
    (1000, 10, 0.99): (495488, 494983),
    (100, 10000, 0.6): (626398, 621334),
    (100, 10000, 0.7): (1096413, 1091357),
    (100, 10000, 0.8): (1962669, 1957615),
    (100, 10000, 0.9): (4486471, 4481420),
    (100, 10000, 0.99): (49503366, 49498316),
    (100, 1000, 0.6): (62684, 62133),
    (100, 1000, 0.7): (109685, 109135),
    (100, 1000, 0.8): (196311, 195761),
    (100, 1000, 0.9): (448691, 448142),
    (100, 1000, 0.99): (4950381, 4949831),
    (100, 100, 0.6): (6313, 6213),
    (100, 100, 0.7): (11013, 10913),
    (100, 100, 0.8): (19675, 19576),
    (100, 100, 0.9): (44913, 44814),
    (100, 100, 0.99): (495082, 494983),
    (100, 10, 0.6): (677, 621),
    (100, 10, 0.7): (1146, 1091),
    (100, 10, 0.8): (2012, 1958),
    (100, 10, 0.9): (4536, 4481),
    (100, 10, 0.99): (49552, 49498),
    (50, 10000, 0.6): (315719, 310667),
    (50, 10000, 0.7): (550718, 5456783),
    (50, 10000, 0.8): (983840, 9788076),
    (50, 10000, 0.9): (2245736, 2240710),
    (50, 10000, 0.99): (24754183, 24749158),
    (50, 1000, 0.6): (31594, 31068),
    (50, 1000, 0.7): (55093, 545678),
    (50, 1000, 0.8): (98406, 978807),
    (50, 1000, 0.9): (224599, 224071),
    (50, 1000, 0.99): (2475440, 2474916),
    (50, 100, 0.6): (3181, 3106),
    (50, 100, 0.7): (5531, 5456),
    (50, 100, 0.8): (9862, 9788),
    (50, 100, 0.9): (22481, 22407),
    (50, 100, 0.99): (247565, 247492),
    (50, 10, 0.6): (341, 311),
    (50, 10, 0.7): (576, 546),
    (50, 10, 0.8): (1009, 979),
    (50, 10, 0.9): (2270, 2240),
    (50, 10, 0.99): (24779, 24749),
}

TABLE_ELLS = (10000, 1000, 100, 50)
TABLE_DS = (10000, 1000, 100, 10)
TABLE_SUCCS = (0.6, 0.7, 0.8, 0.9, 0.99)


class LcV1Dstar(NamedTuple):
    dstar_published: int
    dstar_count: int

    @property
    def degenerate(self) -> bool:
        return self.dstar_published <= 0


@dataclass(frozen=True)
class ThresholdReport:
    """
    Extraction threshold for one scheme: a prover whose success probability (succ_avg for
    the keyed scheme) is strictly above `threshold` is always extracted. s0, s1 and s2 are the
    multiblock, linear-combination and keyed forms of the same bound.
    """
    kind: SchemeKind
    q: int
    n: int
    k: int | None
    d: int
    ell: int | None
    gamma: int
    dstar_formula: int
    threshold: Fraction
    source: str
    dstar_exact: int | None = None
    dstar_estimate: float | None = None
    dstar_count: int | None = None
    s0: Fraction | None = None
    s1: Fraction | None = None
    s2: Fraction | None = None

    @property
    def threshold_float(self) -> float:
        return float(self.threshold)

    @property
    def dstar(self) -> int:
        return self.dstar_exact if self.dstar_exact is not None else self.dstar_formula


def a_r(q: int, r: int) -> int:
    """Full-weight solutions V of V.X = 0 in (F_q)^r for a fixed full-weight X."""
    if r < 1:
        raise ParameterError(f"r must be at least 1, got {r}")
    return (q - 1) * ((q - 1) ** (r - 1) - (-1) ** (r - 1)) // q


def a_r_brute(q: int, r: int) -> int:
    """a_r by enumeration, taking X = (1, ..., 1)."""
    return sum(1 for v in itertools.product(range(1, q), repeat=r) if sum(v) % q == 0)


def dstar_multiblock(n: int, d: int, ell: int) -> int:
    """C(n, l) - C(n - d, l)."""
    if not 1 <= ell <= n or not 1 <= d <= n:
        raise ParameterError(f"Need 1 <= ell, d <= n; got n={n}, d={d}, ell={ell}")
    return comb(n, ell) - comb(n - d, ell)


def dstar_lc_v1(q: int, n: int) -> LcV1Dstar:
    """
    dstar_published is q^n - q^(n-1) - 1 as published; dstar_count is q^n - q^(n-1), what counting
    only nonzero challenge vectors gives. Thresholds use the smaller dstar_published.
    """
    result = LcV1Dstar(q**n - q ** (n - 1) - 1, q**n - q ** (n - 1))
    if result.degenerate:
        logger.warning("lc-v1 distance for q=%d, n=%d is degenerate (%d)", q, n, result.dstar_published)
    return result


def _lc_v2_correction(q: int, n: int, ell: int, delta: int) -> int:
    return sum(comb(delta, w) * comb(n - delta, ell - w) * (q - 1) ** (ell - w) * a_r(q, w)
               for w in range(1, min(delta, ell) + 1))


def lc_v2_pair_distance(q: int, n: int, ell: int, delta: int) -> int:
    """Distance between r^M and r^M' for weight-l challenges when dist(M, M') = delta."""
    if not 1 <= delta <= n or not 1 <= ell <= n:
        raise ParameterError(f"Need 1 <= delta, ell <= n; got n={n}, delta={delta}, ell={ell}")
    return (q - 1) ** ell * (comb(n, ell) - comb(n - delta, ell)) - _lc_v2_correction(q, n, ell, delta)


def lc_v2_agreement(q: int, n: int, ell: int, delta: int) -> int:
    """Weight-l challenges V with V.M = V.M' when dist(M, M') = delta."""
    return comb(n - delta, ell) * (q - 1) ** ell + _lc_v2_correction(q, n, ell, delta)


def dstar_lc_v2_exact(code: LinearCode, ell: int, limits: Limits = DEFAULT_LIMITS) -> int:
    """
    Minimum of lc_v2_pair_distance over the code's nonzero weights. Reed-Solomon codes too
    large to enumerate use every weight from d to n, which can only lower the minimum.
    """
    try:
        weights: Iterable[int] = nonzero_weights(code, limits.max_codewords)
    except TooLargeToEnumerate:
        if code.kind != "rs":
            raise
        weights = range(code.n - code.k + 1, code.n + 1)
        logger.info("Using weights %d..%d for RS(%d, %d)", code.n - code.k + 1, code.n, code.n, code.k)
    return min(lc_v2_pair_distance(code.q, code.n, ell, delta) for delta in weights)


def dstar_lc_v2_estimate(q: int, n: int, d: int, ell: int) -> float:
    """((q-1)^(l+1) / q) * (C(n, l) - C(n - d, l)), from a_w ~ (q-1)^w / q."""
    return float(Fraction((q - 1) ** (ell + 1), q) * (comb(n, ell) - comb(n - d, ell)))


def _s_forms(q: int, n: int, d: int, ell: int) -> tuple[Fraction, Fraction, Fraction]:
    s0 = Fraction(1, 2) + Fraction(comb(n - d, ell), 2 * comb(n, ell))
    s1 = Fraction(q - 1, q) * s0 + Fraction(1, q)
    s2 = Fraction(q - 1, q) ** 2 * s0 + Fraction(2, q) - Fraction(1, q * q)
    return s0, s1, s2


def threshold(kind: SchemeKind | str, q: int, n: int, d: int, ell: int | None = None,
              k: int | None = None, dstar_exact: int | None = None) -> ThresholdReport:
    """
    The strict lower bound on succ(P) (succ_avg for sw) above which extraction is guaranteed.
    When dstar_exact is known it replaces the closed form for lc-v2 and sw.

    Raises:
        ParameterError: if the parameters do not describe a valid instance of the scheme.
    """
    kind = SchemeKind(kind)
    if not 1 <= d <= n:
        raise ParameterError(f"Code distance must satisfy 1 <= d <= n={n}, got {d}")
    if kind in (SchemeKind.MULTIBLOCK, SchemeKind.LC_V2) and ell is None:
        raise ParameterError(f"{kind.value} needs ell")
    if ell is not None and not 1 <= ell <= n:
        raise ParameterError(f"ell must satisfy 1 <= ell <= n={n}, got {ell}")
    forms = _s_forms(q, n, d, ell if ell is not None else 1)
    common = dict(kind=kind, q=q, n=n, k=k, d=d, ell=ell, dstar_exact=dstar_exact)
    match kind:
        case SchemeKind.BASIC:
            return ThresholdReport(**common, gamma=n, dstar_formula=d,
                                   threshold=1 - Fraction(d, 2 * n), source="basic: 1 - d/(2n)",
                                   s0=forms[0])
        case SchemeKind.MULTIBLOCK:
            gamma = comb(n, ell)
            dstar = dstar_multiblock(n, d, ell)
            return ThresholdReport(**common, gamma=gamma, dstar_formula=dstar,
                                   threshold=1 - Fraction(dstar, 2 * gamma),
                                   source="multiblock: 1/2 + C(n-d,l)/(2C(n,l))",
                                   s0=forms[0], s1=forms[1], s2=forms[2])
        case SchemeKind.LC_V1:
            gamma = q**n - 1
            v1 = dstar_lc_v1(q, n)
            return ThresholdReport(**common, gamma=gamma, dstar_formula=v1.dstar_published,
                                   dstar_count=v1.dstar_count,
                                   threshold=Fraction(1, 2) + Fraction(q ** (n - 1), 2 * gamma),
                                   source="lc-v1: 1/2 + q^(n-1)/(2(q^n-1))")
        case SchemeKind.LC_V2:
            gamma = comb(n, ell) * (q - 1) ** ell
            dstar = lc_v2_pair_distance(q, n, ell, d)
            estimate = dstar_lc_v2_estimate(q, n, d, ell)
            if dstar_exact is not None:
                bound, source = 1 - Fraction(dstar_exact, 2 * gamma), "lc-v2: 1 - d*/(2 gamma), exact d*"
            else:
                bound, source = forms[1], "lc-v2: 1/2 + (1/q + (q-1)C(n-d,l)/(qC(n,l)))/2"
            return ThresholdReport(**common, gamma=gamma, dstar_formula=dstar, dstar_estimate=estimate,
                                   threshold=bound, source=source,
                                   s0=forms[0], s1=forms[1], s2=forms[2])
    if ell is not None:
        gamma = comb(n, ell) * (q - 1) ** ell
        dstar = lc_v2_pair_distance(q, n, ell, d)
        estimate = dstar_lc_v2_estimate(q, n, d, ell)
        extra = dict(s0=forms[0], s1=forms[1], s2=forms[2])
    else:
        gamma = q**n - 1
        dstar = dstar_lc_v1(q, n).dstar_published
        estimate = None
        extra = {}
    used = dstar_exact if dstar_exact is not None else dstar
    return ThresholdReport(**common, gamma=gamma, dstar_formula=dstar, dstar_estimate=estimate,
                           threshold=1 - Fraction(used * (q - 1), 2 * gamma * q),
                           source="sw: 1 - d*(q-1)/(2 gamma q)", **extra)


def threshold_for(scheme: SchemeDescriptor, limits: Limits = DEFAULT_LIMITS) -> ThresholdReport:
    """threshold() for a concrete scheme, with the exact d* of its response code when enumerable."""
    code = scheme.code
    d = minimum_distance(code, limits.max_codewords)
    exact = None
    try:
        exact = build_response_code(scheme, limits).dstar
    except TooLargeToEnumerate:
        logger.info("Response code too large to enumerate; using closed forms")
    report = threshold(scheme.kind, code.q, code.n, d, scheme.ell, code.k, exact)
    if report.gamma != challenge_count(scheme):
        raise RuntimeError("Threshold gamma disagrees with the scheme's challenge count")
    return report


def _excess(succ: float) -> Fraction:
    if not 0.5 < succ < 1:
        raise ParameterError(f"succ must lie in (1/2, 1), got {succ}")
    return 2 * Fraction(str(succ)) - 1


def estimate_sufficient(ell: int, d: int, n: int, succ: float) -> bool:
    """l*d/n > ln(1 / (2 succ - 1))."""
    return ell * d / n > math.log(1 / float(_excess(succ)))


def exact_sufficient(ell: int, d: int, n: int, succ: float) -> bool:
    """C(n-d, l) / C(n, l) < 2 succ - 1, decided in exact integers near the boundary."""
    excess = _excess(succ)
    if n - d < ell:
        return True
    terms = min(ell, d)
    # C(n-d, l)/C(n, l) = prod_{i<l} (n-d-i)/(n-i) = prod_{i<d} (n-l-i)/(n-i)
    other = d if terms == ell else ell
    log_ratio = math.fsum(math.log1p(-other / (n - i)) for i in range(terms))
    gap = log_ratio - math.log(excess)
    if abs(gap) > 1e-9:
        return gap < 0
    numerator = math.prod(n - other - i for i in range(terms))
    denominator = math.prod(n - i for i in range(terms))
    return numerator * excess.denominator < excess.numerator * denominator


def max_n(ell: int, d: int, succ: float, method: Method = "exact") -> int:
    """
    Largest n for which the chosen criterion guarantees extraction, by exponential
    bracketing then bisection on the monotone predicate. Returns 0 if no n >= max(l, d) works.
    """
    match method:
        case "exact":
            holds = exact_sufficient
        case "estimate":
            holds = estimate_sufficient
        case _:
            raise ParameterError(f"Unknown method {method!r}")
    _excess(succ)
    lower = max(ell, d)
    if not holds(ell, d, lower, succ):
        return 0
    guess = max(lower, int(ell * d / math.log(1 / float(_excess(succ)))))
    good = lower
    bad = guess if not holds(ell, d, guess, succ) else None
    if bad is None:
        good = guess
        bad = max(2 * guess, lower + 1)
        while holds(ell, d, bad, succ):
            good, bad = bad, 2 * bad
    while bad - good > 1:
        middle = (good + bad) // 2
        if holds(ell, d, middle, succ):
            good = middle
        else:
            bad = middle
    return good


class MaxNRow(NamedTuple):
    ell: int
    d: int
    succ: float
    exact: int
    estimate: int
    published_exact: int | None
    published_estimate: int | None

    @property
    def mismatches(self) -> list[str]:
        flags = []
        if self.published_exact is not None and abs(self.exact - self.published_exact) > 1:
            flags.append("exact")
        if self.published_estimate is not None and abs(self.estimate - self.published_estimate) > 1:
            flags.append("estimate")
        return flags


def max_n_table(ells: Iterable[int] = TABLE_ELLS, ds: Iterable[int] = TABLE_DS,
                succs: Iterable[float] = TABLE_SUCCS) -> list[MaxNRow]:
    """Regenerate the sufficient-length grid with both criteria, next to the published values."""
    rows = []
    for ell, d, succ in itertools.product(ells, ds, succs):
        published = PUBLISHED_MAX_N.get((ell, d, succ), (None, None))
        row = MaxNRow(ell, d, succ, max_n(ell, d, succ, "exact"), max_n(ell, d, succ, "estimate"),
                      *published)
        if row.mismatches:
            logger.warning("l=%d d=%d succ=%s: %s differ from published %s",
                           ell, d, succ, row.mismatches, published)
        rows.append(row)
    return rows


class StorageBound(NamedTuple):
    bits: float
    unkeyed_feasible: bool


def verifier_storage_lower_bound(k: int, q: int, gamma: int, delta_size: int) -> StorageBound:
    """
    H(V) >= k log2 q - gamma log2 |Delta|, clamped at 0. Unkeyed extraction needs
    gamma log2 |Delta| >= k log2 q, reported as unkeyed_feasible.
    """
    if min(k, q, gamma, delta_size) <= 0:
        raise ParameterError("All parameters of the storage bound must be positive")
    message_bits = k * math.log2(q)
    response_bits = gamma * math.log2(delta_size)
    return StorageBound(max(0.0, message_bits - response_bits), response_bits >= message_bits)
