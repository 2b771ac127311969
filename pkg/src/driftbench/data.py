"""Core dataset types, CSV ingestion and the preprocessing pipeline.

Datasets are immutable once constructed: the backing arrays are marked
read-only so they can be shared freely between threads and detector runs.
Instance order is significant, it defines stream order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DataFormatError,
    DegenerateDataError,
    EmptyInputError,
    ParameterError,
    ShapeError,
)

LABEL_POSITIVE = 1
LABEL_NEGATIVE = -1
_VALID_LABELS = (LABEL_NEGATIVE, LABEL_POSITIVE)


@dataclass(frozen=True)
class Instance:
    """One stream element: a feature vector plus an optional {-1,+1} label."""

    features: np.ndarray
    label: int | None = None


class Dataset:
    """An ordered collection of instances with a fixed dimensionality.

    Parameters
    ----------
    X : (n, d) float array of feature values.
    y : optional (n,) int array with values in {-1, +1}.
    feature_names : optional list of d column names.
    """

    def __init__(self, X, y=None, feature_names=None):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ShapeError(f"feature matrix must be 2-D, got shape {X.shape}")
        if y is not None:
            y = np.asarray(y, dtype=int)
            if y.shape != (X.shape[0],):
                raise ShapeError(
                    f"labels have shape {y.shape}, expected ({X.shape[0]},)"
                )
            bad = ~np.isin(y, _VALID_LABELS)
            if bad.any():
                raise DataFormatError(
                    "labels must be in {-1, +1}; found "
                    f"{sorted(set(y[bad].tolist()))} (pre-filter multi-class data "
                    "to a binary problem before loading)"
                )
            y = y.copy()
            y.flags.writeable = False
        if feature_names is None:
            feature_names = [f"f{i + 1}" for i in range(X.shape[1])]
        feature_names = list(feature_names)
        if len(feature_names) != X.shape[1]:
            raise ShapeError(
                f"{len(feature_names)} feature names for {X.shape[1]} features"
            )
        X = X.copy()
        X.flags.writeable = False
        self.X = X
        self.y = y
        self.feature_names = feature_names

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def labeled(self) -> bool:
        return self.y is not None

    def __len__(self) -> int:
        return self.X.shape[0]

    def __getitem__(self, i: int) -> Instance:
        label = None if self.y is None else int(self.y[i])
        return Instance(self.X[i], label)

    def subset(self, rows) -> "Dataset":
        """New Dataset with the given rows, preserving their order."""
        rows = np.asarray(rows)
        y = None if self.y is None else self.y[rows]
        return Dataset(self.X[rows], y, self.feature_names)

    def require_labels(self) -> np.ndarray:
        if self.y is None:
            raise DegenerateDataError("operation requires a labeled dataset")
        return self.y

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        same_y = (
            (self.y is None and other.y is None)
            or (self.y is not None and other.y is not None and np.array_equal(self.y, other.y))
        )
        return (
            np.array_equal(self.X, other.X)
            and same_y
            and self.feature_names == other.feature_names
        )


def load_csv(path, label_column=None, positive_label=None) -> Dataset:
    """Load a UTF-8, comma-separated file with a header row.

    ``label_column`` selects the label column by header name or 0-based index;
    cells equal to ``positive_label`` map to +1, every other value maps to -1.
    With ``label_column=None`` the file is read as unlabeled features only.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows or (len(rows) == 1 and not any(rows[0])):
        raise EmptyInputError(f"{path}: file is empty")
    header = rows[0]
    body = rows[1:]
    if not body:
        raise EmptyInputError(f"{path}: no data rows after the header")

    label_idx = None
    if label_column is not None:
        if isinstance(label_column, int) or (
            isinstance(label_column, str) and label_column.lstrip("-").isdigit()
        ):
            label_idx = int(label_column)
            if not 0 <= label_idx < len(header):
                raise DataFormatError(
                    f"label column index {label_idx} out of range for {len(header)} columns"
                )
        else:
            try:
                label_idx = header.index(label_column)
            except ValueError:
                raise DataFormatError(
                    f"label column {label_column!r} not in header {header}"
                ) from None
        if positive_label is None:
            raise ParameterError("positive_label is required when a label column is given")

    feature_idx = [i for i in range(len(header)) if i != label_idx]
    names = [header[i] for i in feature_idx]
    X = np.empty((len(body), len(feature_idx)), dtype=float)
    y = np.empty(len(body), dtype=int) if label_idx is not None else None

    for r, row in enumerate(body, start=2):  # 1-based, counting the header as row 1
        if len(row) != len(header):
            raise DataFormatError(
                f"{path}: row {r} has {len(row)} cells, expected {len(header)}"
            )
        for c, i in enumerate(feature_idx):
            cell = row[i].strip()
            if cell == "":
                raise DataFormatError(
                    f"{path}: row {r}, column {header[i]!r}: missing values are not supported"
                )
            try:
                X[r - 2, c] = float(cell)
            except ValueError:
                raise DataFormatError(
                    f"{path}: row {r}, column {header[i]!r}: cannot parse {cell!r} as a number"
                ) from None
        if label_idx is not None:
            y[r - 2] = (
                LABEL_POSITIVE
                if row[label_idx].strip() == str(positive_label)
                else LABEL_NEGATIVE
            )

    return Dataset(X, y, names)


@dataclass(frozen=True)
class NormalizationParams:
    """Per-feature minimum/maximum observed on the fit split."""

    minimum: np.ndarray
    maximum: np.ndarray

    @property
    def d(self) -> int:
        return self.minimum.shape[0]


def fit_normalizer(data: Dataset) -> NormalizationParams:
    if len(data) == 0:
        raise EmptyInputError("cannot fit a normalizer on an empty dataset")
    return NormalizationParams(data.X.min(axis=0), data.X.max(axis=0))


def apply_normalizer(params: NormalizationParams, data: Dataset) -> Dataset:
    """Map every feature to [0, 1]; out-of-range values are clamped.

    Features that were constant on the fit split map to 0.
    """
    if params.d != data.d:
        raise ShapeError(f"normalizer has d={params.d}, data has d={data.d}")
    span = params.maximum - params.minimum
    safe = np.where(span > 0, span, 1.0)
    X = (data.X - params.minimum) / safe
    X = np.where(span > 0, X, 0.0)
    np.clip(X, 0.0, 1.0, out=X)
    return Dataset(X, data.y, data.feature_names)


def shuffle(data: Dataset, seed: int) -> Dataset:
    """Deterministically permute instance order."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(data))
    return data.subset(perm)
