"""Reliability and consistency indicators, aggregation, and comparisons.

Runs single-threaded over the completed record store once all tests have
reached a terminal status.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .datatypes import (
    CATEGORIES,
    Category,
    ConsistencyRecord,
    Expectation,
    MeasureDescriptor,
    ReliabilityRecord,
    ScoreKind,
)
from .kernels import kruskal_wallis, ks_2sample, mann_whitney_u

CONSTANT_EPSILON = 0.05
KS_ALPHA = 0.05
COMPARISON_ALPHA = 0.05


class EvaluationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Reliability indicators

def reliability_real(scores: Sequence[float], expectation: Expectation,
                     epsilon: float = CONSTANT_EPSILON,
                     literal_constant: bool = False) -> float:
    """Reliability of a real-valued trajectory under the given expectation.

    Scores must already be oriented higher-is-better. The constant rule
    excludes exactly one median instance and counts every other value
    within relative epsilon of the median; set literal_constant for the
    variant that drops all values equal to the median.
    """
    scores = [float(s) for s in scores]
    k = len(scores)
    if k < 2:
        raise EvaluationError("reliability needs at least 2 scores")
    if expectation in (Expectation.IMPROVE, Expectation.WORSEN):
        hits = 0
        for i in range(k - 1):
            for j in range(i + 1, k):
                if expectation == Expectation.IMPROVE:
                    hits += scores[i] < scores[j]
                else:
                    hits += scores[i] > scores[j]
        return 2.0 * hits / (k * (k - 1))
    if expectation == Expectation.CONSTANT:
        mu = float(np.median(scores))
        if mu == 0.0:
            within = [s for s in scores if abs(s) <= epsilon]
        else:
            within = [s for s in scores if abs(abs(mu - s) / mu) <= epsilon]
        if literal_constant:
            count = sum(1 for s in within if s != mu)
        else:
            count = len(within) - (1 if any(s == mu for s in within) else 0)
        return count / (k - 1)
    raise EvaluationError(f"no reliability defined for {expectation}")


def _boolean_weights(k: int, expectation: Expectation):
    idx = np.arange(k)
    if expectation == Expectation.IMPROVE:
        w_true, w_false = idx, k - 1 - idx
    else:
        w_true, w_false = k - 1 - idx, idx
    half = math.ceil(k / 2)
    r_min = w_true[:half].sum() + w_false[half:].sum()
    r_max = w_false[:half].sum() + w_true[half:].sum()
    if expectation == Expectation.WORSEN:
        r_min, r_max = r_max, r_min
        r_min, r_max = min(r_min, r_max), max(r_min, r_max)
    return w_true, w_false, int(r_min), int(r_max)


def reliability_boolean(scores: Sequence[bool], expectation: Expectation) -> float:
    """Reliability of a boolean trajectory via the positional point system.

    Scores must already be oriented so that True means 'good'.
    """
    scores = [bool(s) for s in scores]
    k = len(scores)
    if k < 2:
        raise EvaluationError("reliability needs at least 2 scores")
    if expectation == Expectation.CONSTANT:
        equal = sum(a == b for a, b in zip(scores, scores[1:]))
        return equal / (k - 1)
    if expectation not in (Expectation.IMPROVE, Expectation.WORSEN):
        raise EvaluationError(f"no reliability defined for {expectation}")
    w_true, w_false, r_min, r_max = _boolean_weights(k, expectation)
    nominal = sum(int(w_true[i]) if s else int(w_false[i]) for i, s in enumerate(scores))
    if r_max == r_min:
        raise EvaluationError("degenerate boolean normalizers (k too small)")
    return (nominal - r_min) / (r_max - r_min)


def canonical_scores(descriptor: MeasureDescriptor, scores: Sequence) -> list:
    """Orient raw trajectory scores so that higher (or True) means better."""
    if descriptor.score_kind == ScoreKind.BOOLEAN:
        return [descriptor.orientation.canonical_bool(s) for s in scores]
    if descriptor.score_kind == ScoreKind.PAIR:
        # pairs reduce to the sum of both counts, fewer is better
        return [-float(sum(s)) for s in scores]
    return [descriptor.orientation.canonical(s) for s in scores]


def trajectory_reliability(descriptor: MeasureDescriptor, scores: Sequence,
                           expectation: Expectation) -> float:
    oriented = canonical_scores(descriptor, scores)
    if descriptor.score_kind == ScoreKind.BOOLEAN:
        return reliability_boolean(oriented, expectation)
    return reliability_real(oriented, expectation)


# ---------------------------------------------------------------------------
# Aggregation

@dataclass
class CellStats:
    mean: float
    std: float
    count: int


def aggregate_reliability(records: Iterable[ReliabilityRecord]
                          ) -> Dict[Tuple[str, Category], CellStats]:
    """Mean +- sample std of r_rel per (measure, category)."""
    cells: Dict[Tuple[str, Category], List[float]] = defaultdict(list)
    for rec in records:
        cells[(rec.measure, rec.category)].append(rec.r_rel)
    out = {}
    for key, values in cells.items():
        arr = np.asarray(values)
        std = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
        out[key] = CellStats(mean=float(arr.mean()), std=std, count=len(arr))
    return out


def ranking(cells: Dict[Tuple[str, Category], CellStats]
            ) -> Dict[Category, List[Tuple[str, CellStats]]]:
    """Per category, measures ordered by mean reliability, best first."""
    out: Dict[Category, List[Tuple[str, CellStats]]] = {}
    for category in CATEGORIES:
        rows = [(m, stats) for (m, c), stats in cells.items() if c == category]
        rows.sort(key=lambda item: (-item[1].mean, item[0]))
        out[category] = rows
    return out


# ---------------------------------------------------------------------------
# Consistency

def consistency_from_groups(groups: Sequence[Sequence[float]],
                            alpha: float = KS_ALPHA) -> Optional[float]:
    """Fraction of group pairs the KS test deems same-distribution.

    Returns None when fewer than two groups carry two or more records.
    """
    usable = [np.asarray(g, dtype=np.float64) for g in groups if len(g) >= 2]
    if len(usable) < 2:
        return None
    same = total = 0
    for i in range(len(usable) - 1):
        for j in range(i + 1, len(usable)):
            _, _, same_dist = ks_2sample(usable[i], usable[j], alpha=alpha)
            same += same_dist
            total += 1
    return same / total


def consistency(records: Iterable[ReliabilityRecord], axis: str,
                alpha: float = KS_ALPHA) -> List[ConsistencyRecord]:
    """r_con per (measure, category), grouping r_rel by dataset or seed."""
    if axis not in ("dataset", "seed"):
        raise EvaluationError(f"unknown consistency axis {axis!r}")
    grouped: Dict[Tuple[str, Category], Dict[object, List[float]]] = defaultdict(
        lambda: defaultdict(list)
    )
    for rec in records:
        key = rec.dataset if axis == "dataset" else rec.seed
        grouped[(rec.measure, rec.category)][key].append(rec.r_rel)
    out = []
    for (measure, category), by_group in grouped.items():
        value = consistency_from_groups(list(by_group.values()), alpha=alpha)
        if value is not None:
            out.append(ConsistencyRecord(measure, category, axis, value))
    return out


# ---------------------------------------------------------------------------
# Statistical comparison (per category)

@dataclass
class ComparisonResult:
    category: Category
    omnibus_h: float
    omnibus_p: float
    measures: List[str] = field(default_factory=list)
    means: Dict[str, float] = field(default_factory=dict)
    pairwise_p: Dict[Tuple[str, str], float] = field(default_factory=dict)
    indistinguishable: List[Tuple[str, str]] = field(default_factory=list)
    bonferroni_factor: int = 0

    def to_dict(self) -> dict:
        return {
            "category": self.category.value,
            "omnibus": {"H": self.omnibus_h, "p": self.omnibus_p},
            "alpha": COMPARISON_ALPHA,
            "bonferroni_factor": self.bonferroni_factor,
            "measures": [
                {"id": m, "mean_r_rel": self.means[m],
                 "rank": rank + 1}
                for rank, m in enumerate(
                    sorted(self.measures, key=lambda m: -self.means[m])
                )
            ],
            "indistinguishable_pairs": [list(pair) for pair in self.indistinguishable],
            "pairwise_p_adjusted": {
                f"{a}|{b}": p for (a, b), p in sorted(self.pairwise_p.items())
            },
        }


def statistical_comparison(records: Iterable[ReliabilityRecord], category: Category,
                           min_measures: int = 3, min_records: int = 5
                           ) -> Optional[ComparisonResult]:
    """Kruskal-Wallis omnibus plus Bonferroni-corrected pairwise MWU tests."""
    per_measure: Dict[str, List[float]] = defaultdict(list)
    for rec in records:
        if rec.category == category:
            per_measure[rec.measure].append(rec.r_rel)
    eligible = {m: v for m, v in per_measure.items() if len(v) >= min_records}
    if len(eligible) < min_measures:
        return None
    measures = sorted(eligible)
    groups = [eligible[m] for m in measures]
    pooled = np.concatenate([np.asarray(g) for g in groups])
    result = ComparisonResult(category=category, omnibus_h=0.0, omnibus_p=1.0,
                              measures=measures,
                              means={m: float(np.mean(eligible[m])) for m in measures})
    if np.all(pooled == pooled[0]):  # degenerate: nothing to compare
        result.indistinguishable = [
            (a, b) for i, a in enumerate(measures) for b in measures[i + 1:]
        ]
        return result
    result.omnibus_h, result.omnibus_p = kruskal_wallis(groups)
    pairs = [(a, b) for i, a in enumerate(measures) for b in measures[i + 1:]]
    result.bonferroni_factor = len(pairs)
    for a, b in pairs:
        _, p = mann_whitney_u(eligible[a], eligible[b])
        adjusted = min(1.0, p * result.bonferroni_factor)
        result.pairwise_p[(a, b)] = adjusted
        if adjusted >= COMPARISON_ALPHA:
            result.indistinguishable.append((a, b))
    return result


# ---------------------------------------------------------------------------
# Runtime aggregation

@dataclass
class RuntimeCell:
    mean: float
    std: float
    valid: int
    cached: int


def runtime_table(step_times: Dict[Tuple[str, str], List[Tuple[float, bool]]]
                  ) -> Dict[Tuple[str, str], RuntimeCell]:
    """(key, dataset) -> mean/std/valid/cached; cache-aided runs excluded
    from the mean and standard deviation."""
    out = {}
    for key, entries in step_times.items():
        plain = [t for t, aided in entries if not aided]
        cached = sum(1 for _, aided in entries if aided)
        if plain:
            arr = np.asarray(plain)
            std = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
            out[key] = RuntimeCell(float(arr.mean()), std, len(plain), cached)
        else:
            out[key] = RuntimeCell(float("nan"), float("nan"), 0, cached)
    return out
