"""Confusion counting, one-way ANOVA, paired bootstrap, and Borda aggregation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .types import AnnotationSet, MqmCategory, SYSTEMS


class SegmentIdMismatch(ValueError):
    pass


class DegenerateInput(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


class InvalidBallot(ValueError):
    pass


# -- MQM confusion counting ---------------------------------------------------

class CategoryCounts(NamedTuple):
    tp: int
    fp: int
    fn: int


@dataclass
class ConfusionCounts:
    per_category: dict[MqmCategory, CategoryCounts]

    def totals(self) -> CategoryCounts:
        return CategoryCounts(
            tp=sum(c.tp for c in self.per_category.values()),
            fp=sum(c.fp for c in self.per_category.values()),
            fn=sum(c.fn for c in self.per_category.values()),
        )


def _group_counts(sets: Sequence[AnnotationSet], severity_aware: bool):
    """segment_id -> {(category[, severity]): count}, merging multiple sets."""
    grouped: dict[str, dict] = {}
    for annotation_set in sets:
        counts = grouped.setdefault(annotation_set.segment_id, {})
        for ann in annotation_set.annotations:
            key = (ann.category, ann.severity) if severity_aware else ann.category
            counts[key] = counts.get(key, 0) + 1
    return grouped


def confusion(
    pred: Sequence[AnnotationSet],
    gold: Sequence[AnnotationSet],
    severity_aware: bool = False,
) -> ConfusionCounts:
    """Per-category TP/FP/FN between predicted and gold annotations.

    Matching is count-based per segment and category: tp = min(#pred, #gold),
    fp/fn take the surplus on either side; severity and subcategory are
    ignored unless severity_aware, which matches within (category, severity)
    cells instead. Both inputs must cover the same segment ids (sets may be
    empty). Satisfies tp+fn = gold count and tp+fp = pred count per category.
    """
    pred_by_segment = _group_counts(pred, severity_aware)
    gold_by_segment = _group_counts(gold, severity_aware)
    if set(pred_by_segment) != set(gold_by_segment):
        only_pred = sorted(set(pred_by_segment) - set(gold_by_segment))
        only_gold = sorted(set(gold_by_segment) - set(pred_by_segment))
        raise SegmentIdMismatch(
            f"segment ids differ (pred-only {only_pred}, gold-only {only_gold})"
        )

    totals = {cat: [0, 0, 0] for cat in MqmCategory}
    for segment_id in pred_by_segment:
        p_counts = pred_by_segment[segment_id]
        g_counts = gold_by_segment[segment_id]
        for key in set(p_counts) | set(g_counts):
            cat = key[0] if severity_aware else key
            p = p_counts.get(key, 0)
            g = g_counts.get(key, 0)
            totals[cat][0] += min(p, g)
            totals[cat][1] += max(0, p - g)
            totals[cat][2] += max(0, g - p)

    return ConfusionCounts(
        per_category={cat: CategoryCounts(*vals) for cat, vals in totals.items()}
    )


# -- one-way ANOVA ------------------------------------------------------------

class AnovaResult(NamedTuple):
    f: float
    p: float
    zero_within_variance: bool = False


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            return h
    raise ArithmeticError(f"betacf failed to converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b), evaluated numerically; accurate well past 1e-9."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def f_distribution_sf(f: float, df_between: int, df_within: int) -> float:
    """P(F >= f) for the F distribution."""
    if f <= 0:
        return 1.0
    if math.isinf(f):
        return 0.0
    x = df_within / (df_within + df_between * f)
    return regularized_incomplete_beta(df_within / 2.0, df_between / 2.0, x)


def anova_f(groups: Sequence[Sequence[float]]) -> AnovaResult:
    """One-way ANOVA F statistic and p-value.

    Needs >= 2 groups of >= 2 values each. All values identical raises
    DegenerateInput; zero within-group variance with nonzero between-group
    variance returns F=inf, p=0 with the zero_within_variance flag set.
    """
    if len(groups) < 2 or any(len(g) < 2 for g in groups):
        raise ValueError("need at least two groups with at least two values each")
    values = [[float(x) for x in g] for g in groups]
    n_total = sum(len(g) for g in values)
    k = len(values)
    # fsum everywhere: correctly rounded sums make the statistic exactly
    # invariant to within-group value order
    grand_mean = math.fsum(x for g in values for x in g) / n_total
    group_means = [math.fsum(g) / len(g) for g in values]

    ss_between = math.fsum(
        len(g) * (mean - grand_mean) ** 2 for g, mean in zip(values, group_means)
    )
    ss_within = math.fsum(
        (x - mean) ** 2 for g, mean in zip(values, group_means) for x in g
    )
    df_between = k - 1
    df_within = n_total - k

    if ss_within == 0.0:
        if ss_between == 0.0:
            raise DegenerateInput("all values identical; F is undefined")
        return AnovaResult(f=math.inf, p=0.0, zero_within_variance=True)

    f = (ss_between / df_between) / (ss_within / df_within)
    return AnovaResult(f=f, p=f_distribution_sf(f, df_between, df_within))


# -- paired bootstrap ---------------------------------------------------------

def paired_bootstrap(
    a: Sequence[float],
    b: Sequence[float],
    resamples: int,
    seed: int,
) -> float:
    """p-value that system a's mean superiority over b fails under resampling.

    Each resample draws len(a) segment indices with replacement; p is the
    fraction of resamples with mean(a*) <= mean(b*) (ties count as failures).
    Resample i derives its RNG from (seed, i), so the result is
    bit-deterministic for a given seed regardless of evaluation order.
    """
    if len(a) != len(b):
        raise LengthMismatch(f"{len(a)} vs {len(b)} scores")
    if len(a) < 2:
        raise ValueError("need at least two paired scores")
    if resamples <= 0:
        raise ValueError("resamples must be positive")
    if seed < 0:
        raise ValueError("seed must be non-negative")
    a_arr = np.asarray(a, dtype=float)
    b_arr = np.asarray(b, dtype=float)
    n = len(a_arr)
    failures = 0
    for i in range(resamples):
        idx = np.random.default_rng([seed, i]).integers(0, n, size=n)
        if a_arr[idx].mean() <= b_arr[idx].mean():
            failures += 1
    return failures / resamples


# -- Borda aggregation ----------------------------------------------------------

BORDA_POINTS = (2, 1, 0)  # best, middle, worst


@dataclass(frozen=True)
class RankingBallot:
    annotator_id: str
    segment_id: str
    model_id: str
    ordering: tuple[str, str, str]  # systems, best to worst

    def __post_init__(self):
        if sorted(self.ordering) != sorted(SYSTEMS):
            raise InvalidBallot(
                f"ordering must be a permutation of {SYSTEMS}, got {self.ordering}"
            )


@dataclass
class BordaResult:
    points: dict[str, int]
    win_rates: dict[tuple[str, str], float]
    ballot_count: int


def borda(ballots: Sequence[RankingBallot]) -> BordaResult:
    """Positional points (2/1/0 per ballot) plus pairwise win rates.

    win_rate(A, B) is the fraction of ballots ranking A above B; the point
    total is always 3 x ballot count.
    """
    if not ballots:
        raise InvalidBallot("no ballots to aggregate")
    points = {system: 0 for system in SYSTEMS}
    above_counts = {(x, y): 0 for x in SYSTEMS for y in SYSTEMS if x != y}
    for ballot in ballots:
        for position, system in enumerate(ballot.ordering):
            points[system] += BORDA_POINTS[position]
        for i, higher in enumerate(ballot.ordering):
            for lower in ballot.ordering[i + 1:]:
                above_counts[(higher, lower)] += 1
    n = len(ballots)
    win_rates = {pair: count / n for pair, count in above_counts.items()}
    return BordaResult(points=points, win_rates=win_rates, ballot_count=n)
