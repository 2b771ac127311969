"""Margin-inclusion signals and the margin density metric.

Three classifier families expose an uncertainty region:

* a linear SVM through its geometric margin |w.x + b| <= 1,
* a subspace ensemble through member disagreement |p_plus - p_minus| <= theta,
* a probabilistic linear model through |p(+1|x) - p(-1|x)| <= theta.

All thresholds are boundary-inclusive. Margin density is the mean signal over
a batch, a number in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import EmptyInputError, ParameterError
from .models import LinearModel, SubspaceEnsemble

SVM_GEOMETRIC = "svm-geometric"
ENSEMBLE_DISAGREEMENT = "ensemble-disagreement"
PROBABILISTIC_CONFIDENCE = "probabilistic-confidence"
_KINDS = (SVM_GEOMETRIC, ENSEMBLE_DISAGREEMENT, PROBABILISTIC_CONFIDENCE)

DEFAULT_THETA_MARGIN = 0.5  # suggested working range is [0.25, 0.75]


@dataclass(frozen=True)
class MarginSpec:
    kind: str = ENSEMBLE_DISAGREEMENT
    theta_margin: float = DEFAULT_THETA_MARGIN

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ParameterError(f"unknown margin kind {self.kind!r}; valid: {_KINDS}")
        if not 0.0 < self.theta_margin < 1.0:
            raise ParameterError(
                f"theta_margin must be in (0, 1), got {self.theta_margin}"
            )


def _as_matrix(batch) -> np.ndarray:
    X = batch.X if isinstance(batch, Dataset) else np.asarray(batch, dtype=float)
    return np.atleast_2d(X)


def svm_margin_signals(model: LinearModel, X) -> np.ndarray:
    """1 where |w.x + b| <= 1, else 0."""
    scores = model.decision_scores(_as_matrix(X))
    return (np.abs(scores) <= 1.0).astype(int)


def svm_margin_signal(model: LinearModel, x) -> int:
    return int(svm_margin_signals(model, np.asarray(x, dtype=float).reshape(1, -1))[0])


def ensemble_margin_signals(ensemble: SubspaceEnsemble, X, theta_margin: float) -> np.ndarray:
    """1 where the vote split satisfies |p_plus - p_minus| <= theta_margin."""
    if not 0.0 < theta_margin < 1.0:
        raise ParameterError(f"theta_margin must be in (0, 1), got {theta_margin}")
    p_plus = ensemble.confidence(_as_matrix(X))
    return (np.abs(2.0 * p_plus - 1.0) <= theta_margin).astype(int)


def ensemble_margin_signal(ensemble: SubspaceEnsemble, x, theta_margin: float) -> int:
    return int(
        ensemble_margin_signals(
            ensemble, np.asarray(x, dtype=float).reshape(1, -1), theta_margin
        )[0]
    )


def probabilistic_margin_signals(model: LinearModel, X, theta_margin: float) -> np.ndarray:
    """1 where |p(+1|x) - p(-1|x)| <= theta_margin."""
    if not 0.0 < theta_margin < 1.0:
        raise ParameterError(f"theta_margin must be in (0, 1), got {theta_margin}")
    p = model.predict_proba(_as_matrix(X))
    return (np.abs(2.0 * p - 1.0) <= theta_margin).astype(int)


def probabilistic_margin_signal(model: LinearModel, x, theta_margin: float) -> int:
    return int(
        probabilistic_margin_signals(
            model, np.asarray(x, dtype=float).reshape(1, -1), theta_margin
        )[0]
    )


def margin_signals(model, spec: MarginSpec, X) -> np.ndarray:
    """Vectorized margin-inclusion signal for the given spec."""
    if spec.kind == SVM_GEOMETRIC:
        return svm_margin_signals(model, X)
    if spec.kind == ENSEMBLE_DISAGREEMENT:
        return ensemble_margin_signals(model, X, spec.theta_margin)
    return probabilistic_margin_signals(model, X, spec.theta_margin)


def margin_signal(model, spec: MarginSpec, x) -> int:
    return int(margin_signals(model, spec, np.asarray(x, dtype=float).reshape(1, -1))[0])


def margin_density(model, spec: MarginSpec, batch) -> float:
    """Fraction of the batch falling inside the model's margin."""
    X = _as_matrix(batch)
    if X.shape[0] == 0:
        raise EmptyInputError("margin density of an empty batch is undefined")
    return float(margin_signals(model, spec, X).mean())


def sample_uncertainty(model, X) -> np.ndarray:
    """1 - |p_plus - p_minus| per sample, for ensembles or probabilistic models."""
    X = _as_matrix(X)
    if isinstance(model, SubspaceEnsemble):
        p = model.confidence(X)
    elif isinstance(model, LinearModel) and model.probabilistic:
        p = model.predict_proba(X)
    else:
        raise ParameterError(
            "uncertainty needs an ensemble or a probabilistic linear model"
        )
    return 1.0 - np.abs(2.0 * p - 1.0)
