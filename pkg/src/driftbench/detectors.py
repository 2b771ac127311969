"""Incremental drift-detector state machines.

The margin-density detector tracks the exponentially weighted fraction of
stream samples falling inside a trained classifier's margin. A deviation of
more than theta reference standard deviations flags a suspected drift, which
routes the next n_train oracle labels to a confirmation test on the deployed
predictor's accuracy. Confirmed drifts trigger retraining by the caller; in
both outcomes a fresh reference is computed from the collected labels and
installed before stepping resumes.

Also here: the accuracy-tracking EWMA, CUSUM and Page-Hinkley recurrences,
the Hellinger-distance feature tracker with its sliding chunk, and a mean
uncertainty tracker. Every detector is a single-owner mutable state machine;
steps must be applied in stream order.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import (
    DegenerateDataError,
    EmptyInputError,
    ParameterError,
    ShapeError,
    StateError,
)
from .margins import MarginSpec, margin_density, sample_uncertainty
from .models import TrainConfig, train_linear_svm, train_logistic, train_subspace_ensemble
from .seeding import seed_for

EPSILON_SIGMA = 1e-3  # floor for reference deviations; keeps perfect folds testable

SUSPECTED = "suspected"
CONFIRMED = "confirmed"
FALSE_ALARM = "false_alarm"


@dataclass(frozen=True)
class ReferenceDistribution:
    """Cross-validated reference for the tracked metric and model accuracy."""

    md_ref: float
    sigma_md: float
    acc_ref: float
    sigma_acc: float

    def __post_init__(self):
        for name in ("md_ref", "sigma_md", "acc_ref", "sigma_acc"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")


@dataclass(frozen=True)
class DriftEvent:
    position: int
    kind: str  # suspected | confirmed | false_alarm
    metric: float
    labels_used: int


def train_model(data: Dataset, config: TrainConfig):
    """Dispatch a TrainConfig to the matching trainer."""
    if config.kind == "svm":
        return train_linear_svm(data, C=config.C, seed=config.seed)
    if config.kind == "logistic":
        return train_logistic(data, config.penalty, config.strength, config.seed)
    if config.kind == "ensemble":
        return train_subspace_ensemble(data, config)
    if config.kind == "tree":
        from .models import train_tree

        return train_tree(data, config)
    raise ParameterError(f"unknown model kind {config.kind!r}")


def _with_seed(config: TrainConfig, seed: int) -> TrainConfig:
    cfg = TrainConfig(**vars(config))
    cfg.seed = seed
    return cfg


def _stratified_order(y: np.ndarray) -> np.ndarray:
    """Interleave the two classes so every sequential band sees both."""
    pos = np.nonzero(y == 1)[0]
    neg = np.nonzero(y == -1)[0]
    order = np.empty(len(y), dtype=int)
    longer, shorter = (pos, neg) if len(pos) >= len(neg) else (neg, pos)
    # spread the shorter class as evenly as possible through the longer one
    merged = []
    ratio = len(longer) / max(len(shorter), 1)
    li = si = 0
    for k in range(len(y)):
        if si < len(shorter) and (li >= len(longer) or li >= (si + 1) * ratio - 1):
            merged.append(shorter[si])
            si += 1
        else:
            merged.append(longer[li])
            li += 1
    order[:] = merged
    return order


def _fold_bands(n: int, k: int) -> list[np.ndarray]:
    return [np.asarray(b) for b in np.array_split(np.arange(n), k)]


def reference_from_cv(
    train: Dataset,
    config: TrainConfig,
    spec: MarginSpec | None,
    k: int = 5,
    seed: int = 0,
    predict_config: TrainConfig | None = None,
    metric: str = "margin_density",
    epsilon_sigma: float = EPSILON_SIGMA,
) -> ReferenceDistribution:
    """Sequential k-fold reference: fold means and population standard
    deviations of the unlabeled metric (margin density or mean uncertainty,
    from ``config``) and of accuracy (from ``predict_config`` when the
    prediction model differs from the detection model).

    Folds are re-assigned by class interleaving if a sequential training fold
    would be single-class.
    """
    n = len(train)
    if n < k:
        raise ParameterError(f"need at least k={k} samples, got {n}")
    y = train.require_labels()
    if len(np.unique(y)) < 2:
        raise DegenerateDataError("reference requires both classes in the training data")

    order = np.arange(n)
    for attempt in range(2):
        bands = _fold_bands(n, k)
        ok = True
        for i in range(k):
            train_rows = np.concatenate([bands[j] for j in range(k) if j != i])
            if len(np.unique(y[order[train_rows]])) < 2:
                ok = False
                break
        if ok:
            break
        if attempt == 1:
            raise DegenerateDataError(
                "could not build two-class training folds even after stratification"
            )
        order = _stratified_order(y)

    accs, metrics = [], []
    for i in range(k):
        test_rows = order[bands[i]]
        train_rows = order[np.concatenate([bands[j] for j in range(k) if j != i])]
        fold_train = train.subset(train_rows)
        fold_test = train.subset(test_rows)

        detect_model = train_model(fold_train, _with_seed(config, seed_for(seed, "cv", i, "detect")))
        if predict_config is None:
            predict_model = detect_model
        else:
            predict_model = train_model(
                fold_train, _with_seed(predict_config, seed_for(seed, "cv", i, "predict"))
            )
        acc = float(np.mean(predict_model.predict(fold_test.X) == fold_test.y))
        accs.append(acc)
        if metric == "margin_density":
            metrics.append(margin_density(detect_model, spec, fold_test))
        elif metric == "uncertainty":
            metrics.append(float(sample_uncertainty(detect_model, fold_test.X).mean()))
        elif metric == "none":
            metrics.append(0.0)
        else:
            raise ParameterError(f"unknown reference metric {metric!r}")

    return ReferenceDistribution(
        md_ref=float(np.mean(metrics)),
        sigma_md=max(float(np.std(metrics)), epsilon_sigma),
        acc_ref=float(np.mean(accs)),
        sigma_acc=max(float(np.std(accs)), epsilon_sigma),
    )


def reference_from_bands(
    data: Dataset,
    predict_model,
    detect_model=None,
    spec: MarginSpec | None = None,
    k: int = 5,
    metric: str = "margin_density",
    epsilon_sigma: float = EPSILON_SIGMA,
) -> ReferenceDistribution:
    """Reference for already-trained models: fold bands are evaluation-only.

    Used after a false alarm, where the deployed models stay in place; fold
    retraining would describe models nobody is running and make the installed
    reference incommensurable with the detector's live signal.
    """
    n = len(data)
    if n < k:
        raise ParameterError(f"need at least k={k} samples, got {n}")
    y = data.require_labels()
    accs, metrics = [], []
    for band in _fold_bands(n, k):
        fold = data.subset(band)
        accs.append(float(np.mean(predict_model.predict(fold.X) == fold.y)))
        if metric == "margin_density" and detect_model is not None:
            metrics.append(margin_density(detect_model, spec, fold))
        elif metric == "uncertainty" and detect_model is not None:
            metrics.append(float(sample_uncertainty(detect_model, fold.X).mean()))
        else:
            metrics.append(0.0)
    return ReferenceDistribution(
        md_ref=float(np.mean(metrics)),
        sigma_md=max(float(np.std(metrics)), epsilon_sigma),
        acc_ref=float(np.mean(accs)),
        sigma_acc=max(float(np.std(accs)), epsilon_sigma),
    )


# ---------------------------------------------------------------------------
# margin-density detector


class MarginDensityDetector:
    """The margin-density drift detector (md3).

    step() consumes one margin-inclusion signal and may flag a suspected
    drift; the caller then feeds n_train labeled samples through
    feed_label(), receives a confirmed / false-alarm decision, recomputes the
    reference from the collected buffer, and calls install_reference().
    """

    def __init__(self, reference: ReferenceDistribution, lam: float, theta: float, n_train: int):
        if not 0.0 < lam < 1.0:
            raise ParameterError(f"lambda must be in (0, 1), got {lam}")
        if theta < 0:
            raise ParameterError(f"theta must be >= 0, got {theta}")
        if n_train < 1:
            raise ParameterError(f"n_train must be >= 1, got {n_train}")
        self.reference = reference
        self.lam = lam
        self.theta = theta
        self.n_train = n_train
        self.md = reference.md_ref
        self.currently_drifting = False
        self.pending_install = False
        self._buffer_x: list = []
        self._buffer_y: list = []
        self._buffer_correct: list = []

    @property
    def metric(self) -> float:
        return self.md

    @property
    def buffer_size(self) -> int:
        return len(self._buffer_y)

    def step(self, signal: int) -> str | None:
        if self.pending_install:
            raise StateError("install a new reference before stepping again")
        if signal not in (0, 1):
            raise ParameterError(f"margin signal must be 0 or 1, got {signal}")
        if self.currently_drifting:
            # metric frozen while labels are being collected
            return None
        self.md = self.lam * self.md + (1.0 - self.lam) * signal
        if abs(self.md - self.reference.md_ref) > self.theta * self.reference.sigma_md:
            self.currently_drifting = True
            self._buffer_x, self._buffer_y, self._buffer_correct = [], [], []
            return SUSPECTED
        return None

    def feed_label(self, x, label: int, correct: bool) -> str | None:
        """Buffer one labeled sample; returns a decision once n_train arrive."""
        if not self.currently_drifting:
            raise StateError("feed_label is only valid while a drift is suspected")
        self._buffer_x.append(np.asarray(x, dtype=float))
        self._buffer_y.append(int(label))
        self._buffer_correct.append(bool(correct))
        if len(self._buffer_y) < self.n_train:
            return None
        acc = float(np.mean(self._buffer_correct))
        self.buffer_accuracy = acc
        self.currently_drifting = False
        self.pending_install = True
        drop = self.reference.acc_ref - acc
        return CONFIRMED if drop > self.theta * self.reference.sigma_acc else FALSE_ALARM

    def buffer_dataset(self, feature_names=None) -> Dataset:
        if not self._buffer_y:
            raise EmptyInputError("no buffered samples")
        return Dataset(np.vstack(self._buffer_x), np.asarray(self._buffer_y), feature_names)

    def install_reference(self, reference: ReferenceDistribution) -> None:
        """Install a fresh reference and re-arm; the moving metric restarts at
        the new expected value so a stale average cannot re-trigger."""
        self.reference = reference
        self.md = reference.md_ref
        self.pending_install = False
        self.currently_drifting = False
        self._buffer_x, self._buffer_y, self._buffer_correct = [], [], []

    def to_dict(self) -> dict:
        return {
            "type": "md3",
            "md": self.md,
            "lambda": self.lam,
            "theta": self.theta,
            "n_train": self.n_train,
            "currently_drifting": self.currently_drifting,
            "pending_install": self.pending_install,
            "reference": vars(self.reference),
            "buffer": {
                "x": [list(map(float, v)) for v in self._buffer_x],
                "y": self._buffer_y,
                "correct": self._buffer_correct,
            },
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MarginDensityDetector":
        det = cls(
            ReferenceDistribution(**doc["reference"]),
            doc["lambda"],
            doc["theta"],
            doc["n_train"],
        )
        det.md = doc["md"]
        det.currently_drifting = doc["currently_drifting"]
        det.pending_install = doc["pending_install"]
        det._buffer_x = [np.asarray(v, dtype=float) for v in doc["buffer"]["x"]]
        det._buffer_y = list(doc["buffer"]["y"])
        det._buffer_correct = list(doc["buffer"]["correct"])
        return det


# ---------------------------------------------------------------------------
# univariate trackers


class EwmaTracker:
    """Exponentially weighted moving average with a one-sided alarm:
    M_t = lam * M_{t-1} + (1 - lam) * eps_t, alarm when M_t - mu0 > theta * sigma0.
    """

    def __init__(self, mu0: float, sigma0: float, lam: float, theta: float):
        if not 0.0 < lam < 1.0:
            raise ParameterError(f"lambda must be in (0, 1), got {lam}")
        self.mu0 = mu0
        self.sigma0 = sigma0
        self.lam = lam
        self.theta = theta
        self.m = mu0

    @property
    def metric(self) -> float:
        return self.m

    def step(self, eps: float) -> bool:
        if not math.isfinite(eps):
            raise ParameterError("eps must be finite")
        self.m = self.lam * self.m + (1.0 - self.lam) * eps
        return self.m - self.mu0 > self.theta * self.sigma0

    def reset(self, mu0: float, sigma0: float) -> None:
        self.mu0 = mu0
        self.sigma0 = sigma0
        self.m = mu0

    def to_dict(self) -> dict:
        return {
            "type": "ewma",
            "mu0": self.mu0,
            "sigma0": self.sigma0,
            "lambda": self.lam,
            "theta": self.theta,
            "m": self.m,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EwmaTracker":
        tracker = cls(doc["mu0"], doc["sigma0"], doc["lambda"], doc["theta"])
        tracker.m = doc["m"]
        return tracker


class CusumTracker:
    """M_t = max(0, M_{t-1} + eps_t - v); alarm and reset to 0 when M_t > theta."""

    def __init__(self, v: float, theta: float):
        self.v = v
        self.theta = theta
        self.m = 0.0

    @property
    def metric(self) -> float:
        return self.m

    def step(self, eps: float) -> bool:
        if not math.isfinite(eps):
            raise ParameterError("eps must be finite")
        self.m = max(0.0, self.m + eps - self.v)
        if self.m > self.theta:
            self.m = 0.0
            return True
        return False

    def reset(self) -> None:
        self.m = 0.0

    def to_dict(self) -> dict:
        return {"type": "cusum", "v": self.v, "theta": self.theta, "m": self.m}

    @classmethod
    def from_dict(cls, doc: dict) -> "CusumTracker":
        tracker = cls(doc["v"], doc["theta"])
        tracker.m = doc["m"]
        return tracker


class PageHinkleyTracker:
    """M_t = M_{t-1} + (eps_t - v) with running minimum M_ref = min over the
    history (including M_0 = 0); alarm and reset when M_t - M_ref > theta."""

    def __init__(self, v: float, theta: float):
        self.v = v
        self.theta = theta
        self.m = 0.0
        self.m_ref = 0.0

    @property
    def metric(self) -> float:
        return self.m

    def step(self, eps: float) -> bool:
        if not math.isfinite(eps):
            raise ParameterError("eps must be finite")
        self.m = self.m + (eps - self.v)
        self.m_ref = min(self.m_ref, self.m)
        if self.m - self.m_ref > self.theta:
            self.m = 0.0
            self.m_ref = 0.0
            return True
        return False

    def reset(self) -> None:
        self.m = 0.0
        self.m_ref = 0.0

    def to_dict(self) -> dict:
        return {
            "type": "pht",
            "v": self.v,
            "theta": self.theta,
            "m": self.m,
            "m_ref": self.m_ref,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PageHinkleyTracker":
        tracker = cls(doc["v"], doc["theta"])
        tracker.m = doc["m"]
        tracker.m_ref = doc["m_ref"]
        return tracker


class UncertaintyTracker:
    """EWMA over per-sample uncertainty (1 - |p_plus - p_minus|) with a
    two-sided alarm against a cross-validated reference mean."""

    def __init__(self, u_ref: float, sigma_u: float, lam: float, theta: float):
        if not 0.0 < lam < 1.0:
            raise ParameterError(f"lambda must be in (0, 1), got {lam}")
        self.u_ref = u_ref
        self.sigma_u = sigma_u
        self.lam = lam
        self.theta = theta
        self.m = u_ref

    @property
    def metric(self) -> float:
        return self.m

    def step(self, uncertainty: float) -> bool:
        if not 0.0 <= uncertainty <= 1.0 + 1e-12:
            raise ParameterError(f"uncertainty must be in [0, 1], got {uncertainty}")
        self.m = self.lam * self.m + (1.0 - self.lam) * uncertainty
        return abs(self.m - self.u_ref) > self.theta * self.sigma_u

    def reset(self, u_ref: float, sigma_u: float) -> None:
        self.u_ref = u_ref
        self.sigma_u = sigma_u
        self.m = u_ref

    def to_dict(self) -> dict:
        return {
            "type": "uncertainty",
            "u_ref": self.u_ref,
            "sigma_u": self.sigma_u,
            "lambda": self.lam,
            "theta": self.theta,
            "m": self.m,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "UncertaintyTracker":
        tracker = cls(doc["u_ref"], doc["sigma_u"], doc["lambda"], doc["theta"])
        tracker.m = doc["m"]
        return tracker


# ---------------------------------------------------------------------------
# Hellinger distance tracker


def histogram_counts(X: np.ndarray, bins: int) -> np.ndarray:
    """Per-feature counts over ``bins`` equal-width cells on [0, 1]; (d, bins)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    cells = np.clip((X * bins).astype(int), 0, bins - 1)
    d = X.shape[1]
    counts = np.zeros((d, bins), dtype=float)
    for f in range(d):
        counts[f] = np.bincount(cells[:, f], minlength=bins)
    return counts


def hellinger_distance(P: np.ndarray, Q: np.ndarray) -> float:
    """Feature-averaged Hellinger distance between per-feature histograms.

    P and Q are (d, b) count matrices with matching shape and positive
    per-feature totals. The result lies in [0, sqrt(2)]: 0 for identical
    distributions, sqrt(2) for disjoint ones.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if P.shape != Q.shape:
        raise ShapeError(f"histogram shapes differ: {P.shape} vs {Q.shape}")
    p_tot = P.sum(axis=1, keepdims=True)
    q_tot = Q.sum(axis=1, keepdims=True)
    if np.any(p_tot <= 0) or np.any(q_tot <= 0):
        raise DegenerateDataError("every feature histogram needs a positive total")
    diff = np.sqrt(P / p_tot) - np.sqrt(Q / q_tot)
    per_feature = np.sqrt((diff**2).sum(axis=1))
    return float(per_feature.mean())


def hellinger_between(X_ref: np.ndarray, X_cur: np.ndarray, bins: int) -> float:
    return hellinger_distance(histogram_counts(X_ref, bins), histogram_counts(X_cur, bins))


class HellingerDetector:
    """Sliding-chunk Hellinger feature tracker (hdddm).

    The reference histogram comes from the training split. The current chunk
    is the last N stream samples, recomputed incrementally as the chunk
    slides one sample at a time. The acceptable deviation (hd_ref, sigma_hd)
    is the mean and deviation of the reference-vs-chunk distance measured on
    chunks slid through the training data at a stride of N/3.
    """

    def __init__(
        self,
        train_X: np.ndarray,
        n_chunk: int,
        theta: float,
        epsilon_sigma: float = EPSILON_SIGMA,
    ):
        train_X = np.atleast_2d(np.asarray(train_X, dtype=float))
        if n_chunk < 3:
            raise ParameterError(f"chunk size must be >= 3, got {n_chunk}")
        self.n_chunk = n_chunk
        self.theta = theta
        self.bins = math.ceil(math.sqrt(n_chunk))
        self.d = train_X.shape[1]
        self.epsilon_sigma = epsilon_sigma
        self._chunk: deque = deque()
        self._chunk_hist = np.zeros((self.d, self.bins))
        self.hd = 0.0
        self._calibrate(train_X)

    def _calibrate(self, X: np.ndarray) -> None:
        self.ref_hist = histogram_counts(X, self.bins)
        stride = max(self.n_chunk // 3, 1)
        offsets = range(0, len(X) - self.n_chunk + 1, stride)
        # leave-chunk-out: compare each calibration chunk against the
        # histogram of the remaining samples, otherwise the chunk's own mass
        # deflates the null distances and every fresh chunk looks drifted
        distances = []
        for o in offsets:
            chunk_hist = histogram_counts(X[o : o + self.n_chunk], self.bins)
            rest = self.ref_hist - chunk_hist
            if rest.sum() <= 0:
                continue
            distances.append(hellinger_distance(rest, chunk_hist))
        if not distances:
            raise ParameterError(
                f"calibration needs more than n_chunk={self.n_chunk} training samples, got {len(X)}"
            )
        self.hd_ref = float(np.mean(distances))
        self.sigma_hd = max(float(np.std(distances)), self.epsilon_sigma)

    @property
    def metric(self) -> float:
        return self.hd

    def step(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise ShapeError(f"expected a length-{self.d} sample, got shape {x.shape}")
        cells = np.clip((x * self.bins).astype(int), 0, self.bins - 1)
        self._chunk.append(cells)
        self._chunk_hist[np.arange(self.d), cells] += 1
        if len(self._chunk) > self.n_chunk:
            old = self._chunk.popleft()
            self._chunk_hist[np.arange(self.d), old] -= 1
        if len(self._chunk) < self.n_chunk:
            return False  # warm-up: never alarm before a full chunk exists
        self.hd = hellinger_distance(self.ref_hist, self._chunk_hist)
        return self.hd - self.hd_ref > self.theta * self.sigma_hd

    def rebuild(self, buffer_X: np.ndarray) -> None:
        """Rebuild the reference from a confirmation buffer.

        The buffer is one chunk long, so the deviation population compares
        each of its thirds against the remaining two thirds; the smaller
        chunks over-estimate the null noise slightly, erring on the quiet
        side right after a decision.
        """
        buffer_X = np.atleast_2d(np.asarray(buffer_X, dtype=float))
        self.ref_hist = histogram_counts(buffer_X, self.bins)
        distances = []
        for part in np.array_split(buffer_X, 3):
            if len(part) == 0:
                continue
            part_hist = histogram_counts(part, self.bins)
            rest = self.ref_hist - part_hist
            if rest.sum() <= 0:
                continue
            distances.append(hellinger_distance(rest, part_hist))
        if distances:
            self.hd_ref = float(np.mean(distances))
            self.sigma_hd = max(float(np.std(distances)), self.epsilon_sigma)
        self._chunk.clear()
        self._chunk_hist[:] = 0.0
        self.hd = 0.0

    def to_dict(self) -> dict:
        return {
            "type": "hdddm",
            "n_chunk": self.n_chunk,
            "theta": self.theta,
            "bins": self.bins,
            "d": self.d,
            "hd": self.hd,
            "hd_ref": self.hd_ref,
            "sigma_hd": self.sigma_hd,
            "ref_hist": self.ref_hist.tolist(),
            "chunk": [cells.tolist() for cells in self._chunk],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "HellingerDetector":
        det = cls.__new__(cls)
        det.n_chunk = doc["n_chunk"]
        det.theta = doc["theta"]
        det.bins = doc["bins"]
        det.d = doc["d"]
        det.epsilon_sigma = EPSILON_SIGMA
        det.hd = doc["hd"]
        det.hd_ref = doc["hd_ref"]
        det.sigma_hd = doc["sigma_hd"]
        det.ref_hist = np.asarray(doc["ref_hist"], dtype=float)
        det._chunk = deque(np.asarray(c, dtype=int) for c in doc["chunk"])
        det._chunk_hist = np.zeros((det.d, det.bins))
        for cells in det._chunk:
            det._chunk_hist[np.arange(det.d), cells] += 1
        return det
