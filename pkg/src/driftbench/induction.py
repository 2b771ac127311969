"""Controlled drift induction for static labeled datasets.

Features are ranked by information gain against the label; a chosen fraction
from the top or bottom of the ranking has its values cyclically rotated for
one class after a change point. Rotating high-gain features manufactures a
real concept drift; rotating low-gain features perturbs the raw distribution
without touching what a trained model relies on, which is exactly the
false-alarm scenario for feature-tracking detectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import DegenerateDataError, ParameterError

TOP_FRACTION = "top"
BOTTOM_FRACTION = "bottom"

DEFAULT_FRACTION = 0.25
DEFAULT_CHANGE_POINT = 0.5
DEFAULT_BINS = 10
DEFAULT_TARGET_CLASS = -1


@dataclass(frozen=True)
class FeatureRanking:
    """(feature index, gain) pairs, descending by gain, ties to lower index."""

    entries: tuple

    def indices(self) -> list[int]:
        return [f for f, _ in self.entries]

    def top(self, m: int) -> list[int]:
        return self.indices()[:m]

    def bottom(self, m: int) -> list[int]:
        return self.indices()[-m:]


@dataclass(frozen=True)
class InductionPlan:
    target_class: int
    feature_subset: tuple
    change_point: float
    mode: str
    fraction: float = DEFAULT_FRACTION
    bins: int = DEFAULT_BINS
    ranking: tuple = field(default=())

    def __post_init__(self):
        if not self.feature_subset:
            raise ParameterError("feature subset must be non-empty")
        if len(set(self.feature_subset)) != len(self.feature_subset):
            raise ParameterError("feature subset indices must be distinct")
        if not 0.0 < self.change_point < 1.0:
            raise ParameterError(
                f"change_point must be inside (0, 1), got {self.change_point}"
            )
        if self.mode not in (TOP_FRACTION, BOTTOM_FRACTION):
            raise ParameterError(f"mode must be 'top' or 'bottom', got {self.mode!r}")

    def to_dict(self) -> dict:
        return {
            "target_class": self.target_class,
            "feature_subset": list(self.feature_subset),
            "change_point": self.change_point,
            "mode": self.mode,
            "fraction": self.fraction,
            "bins": self.bins,
            "ranking": [[int(f), float(g)] for f, g in self.ranking],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "InductionPlan":
        return cls(
            target_class=int(doc["target_class"]),
            feature_subset=tuple(int(f) for f in doc["feature_subset"]),
            change_point=float(doc["change_point"]),
            mode=doc["mode"],
            fraction=float(doc.get("fraction", DEFAULT_FRACTION)),
            bins=int(doc.get("bins", DEFAULT_BINS)),
            ranking=tuple((int(f), float(g)) for f, g in doc.get("ranking", [])),
        )


def _entropy_from_counts(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def information_gain(values: np.ndarray, y: np.ndarray, bins: int) -> float:
    """H(label) - H(label | feature binned into equal-width cells on [0, 1])."""
    pos = y == 1
    h_label = _entropy_from_counts(np.array([pos.sum(), (~pos).sum()]))
    cells = np.clip((values * bins).astype(int), 0, bins - 1)
    n = len(y)
    cond = 0.0
    for b in range(bins):
        in_cell = cells == b
        m = int(in_cell.sum())
        if m == 0:
            continue
        k = int(pos[in_cell].sum())
        cond += (m / n) * _entropy_from_counts(np.array([k, m - k]))
    return h_label - cond


def rank_by_information_gain(data: Dataset, bins: int = DEFAULT_BINS) -> FeatureRanking:
    """Rank all features by information gain, descending; ties break toward
    the lower feature index. Requires labels and bins >= 2."""
    if bins < 2:
        raise ParameterError(f"bins must be >= 2, got {bins}")
    y = data.require_labels()
    gains = [information_gain(data.X[:, f], y, bins) for f in range(data.d)]
    order = sorted(range(data.d), key=lambda f: (-gains[f], f))
    return FeatureRanking(tuple((f, gains[f]) for f in order))


def change_index(change_point: float, n: int) -> int:
    """First stream position affected by the induced drift."""
    return math.ceil(change_point * n)


def rotate_features(data: Dataset, plan: InductionPlan) -> Dataset:
    """Cyclically right-shift the plan's feature values for target-class
    instances at or after the change point.

    With subset (f1, ..., fk): new f1 takes old fk and every other fj takes
    old f(j-1). Instance order, labels and all other cells are untouched.
    """
    y = data.require_labels()
    subset = np.asarray(plan.feature_subset, dtype=int)
    if subset.max(initial=-1) >= data.d or subset.min(initial=0) < 0:
        raise ParameterError(
            f"feature subset {subset.tolist()} out of range for d={data.d}"
        )
    start = change_index(plan.change_point, len(data))
    X = data.X.copy()
    rows = np.nonzero(y == plan.target_class)[0]
    rows = rows[rows >= start]
    if len(subset) > 1 and len(rows) > 0:
        X[np.ix_(rows, subset)] = X[np.ix_(rows, np.roll(subset, 1))]
    return Dataset(X, y, data.feature_names)


def induce(
    data: Dataset,
    mode: str = TOP_FRACTION,
    fraction: float = DEFAULT_FRACTION,
    change_point: float = DEFAULT_CHANGE_POINT,
    target_class: int = DEFAULT_TARGET_CLASS,
    bins: int = DEFAULT_BINS,
) -> tuple[Dataset, InductionPlan]:
    """Rank features, pick ceil(fraction * d) of them from the top or bottom
    of the ranking, rotate, and return the induced dataset with its plan."""
    if not 0.0 < fraction <= 1.0:
        raise ParameterError(f"fraction must be in (0, 1], got {fraction}")
    if target_class not in (-1, 1):
        raise ParameterError(f"target_class must be -1 or +1, got {target_class}")
    ranking = rank_by_information_gain(data, bins)
    m = math.ceil(fraction * data.d)
    if m < 1:
        raise DegenerateDataError("fraction selects no features")
    subset = ranking.top(m) if mode == TOP_FRACTION else ranking.bottom(m)
    plan = InductionPlan(
        target_class=target_class,
        feature_subset=tuple(subset),
        change_point=change_point,
        mode=mode,
        fraction=fraction,
        bins=bins,
        ranking=ranking.entries,
    )
    return rotate_features(data, plan), plan
