"""Tabular data loading, missingness synthesis and windowed streaming.

A loaded dataset is replayed column-group by column-group: each group of
`window_size` consecutive features forms one sparse window of the stream,
carrying the raw values plus a boolean observation grid.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np


class CsvFormatError(ValueError):
    """Raised when an input CSV cannot be parsed into a labeled dataset."""


@dataclass
class Dataset:
    """Labeled tabular data: an M x D value grid plus integer class labels."""

    values: np.ndarray
    labels: np.ndarray
    feature_names: list[str] | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.values.ndim != 2:
            raise ValueError("values must be a 2-D matrix")
        m, d = self.values.shape
        if m < 2 or d < 1:
            raise ValueError(f"need at least 2 rows and 1 feature, got {m}x{d}")
        if self.labels.shape != (m,):
            raise ValueError("labels length must equal the number of rows")
        if np.unique(self.labels).size < 2:
            raise ValueError("single-class label vector")
        if self.feature_names is not None and len(self.feature_names) != d:
            raise ValueError("feature_names length must equal the feature count")

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]


@dataclass
class ObservationMask:
    """Boolean observation grid (True = observed) with its generation recipe."""

    mask: np.ndarray
    missing_rate: float
    seed: int

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=bool)

    @property
    def n_missing(self) -> int:
        return int(self.mask.size - self.mask.sum())


@dataclass
class SparseWindow:
    """One stream window: `width` consecutive features over all M instances.

    Values at unobserved cells are NaN sentinels and must never be consumed;
    read through `observed` only.
    """

    window_index: int  # 1-based position in the stream
    global_feature_ids: list[int]
    values: np.ndarray
    observed: np.ndarray

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]


def _parse_float(token: str) -> float | None:
    try:
        v = float(token)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def load_csv(path, label_column="last") -> Dataset:
    """Load a labeled CSV file.

    The label column is given as a 0-based index or the string "last".  An
    optional header row is auto-detected: if any non-label cell of the first
    row does not parse as a number, the row is treated as a header.  Labels
    (integers or strings) are re-encoded to 0..K-1 in first-appearance order.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise CsvFormatError(f"{path}: empty file")

    n_cols = len(rows[0])
    if n_cols < 2:
        raise CsvFormatError(f"{path}: need at least one feature column plus labels")
    label_idx = n_cols - 1 if label_column == "last" else int(label_column)
    if not 0 <= label_idx < n_cols:
        raise CsvFormatError(f"{path}: label column {label_idx} out of range")

    feature_idx = [c for c in range(n_cols) if c != label_idx]
    header = None
    start = 0
    if any(_parse_float(rows[0][c]) is None for c in feature_idx):
        header = rows[0]
        start = 1
        if len(rows) == 1:
            raise CsvFormatError(f"{path}: header only, no data rows")

    values = []
    raw_labels = []
    for line_no, row in enumerate(rows[start:], start=start + 1):
        if len(row) != n_cols:
            raise CsvFormatError(f"{path}: ragged row at line {line_no}")
        feat_row = []
        for c in feature_idx:
            v = _parse_float(row[c])
            if v is None:
                raise CsvFormatError(
                    f"{path}: cannot parse value {row[c]!r} at line {line_no}, column {c + 1}"
                )
            feat_row.append(v)
        values.append(feat_row)
        raw_labels.append(row[label_idx].strip())

    # first-appearance label encoding
    code: dict[str, int] = {}
    labels = []
    for tok in raw_labels:
        if tok not in code:
            code[tok] = len(code)
        labels.append(code[tok])
    if len(code) < 2:
        raise CsvFormatError(f"{path}: single-class label vector")

    names = [header[c].strip() for c in feature_idx] if header else None
    return Dataset(np.array(values), np.array(labels), names)


def apply_mask(data: Dataset, missing_rate: float, seed: int) -> ObservationMask:
    """Hide exactly round(missing_rate * M * D) cells, uniformly at random.

    Cells are drawn without replacement over the whole grid, so the same
    (seed, rate, shape) always reproduces the identical mask.
    """
    if not 0.0 <= missing_rate < 1.0:
        raise ValueError(f"missing_rate must be in [0, 1), got {missing_rate}")
    m, d = data.values.shape
    n_missing = int(round(missing_rate * m * d))
    mask = np.ones(m * d, dtype=bool)
    if n_missing:
        rng = np.random.default_rng(seed)
        hidden = rng.choice(m * d, size=n_missing, replace=False)
        mask[hidden] = False
    return ObservationMask(mask.reshape(m, d), missing_rate, seed)


def standardize_observed(data: Dataset, mask: ObservationMask) -> Dataset:
    """Standardize each column to mean 0 / variance 1 over its observed cells.

    Columns with no observed spread (zero variance, or fewer than two observed
    entries) map to all zeros.  Unobserved cells receive the same affine map;
    they are masked out again when the data is windowed.
    """
    values = data.values.copy()
    obs = mask.mask
    for c in range(values.shape[1]):
        col_obs = values[obs[:, c], c]
        if col_obs.size < 2:
            values[:, c] = 0.0
            continue
        mu = col_obs.mean()
        sigma = col_obs.std()
        if sigma == 0.0:
            values[:, c] = 0.0
        else:
            values[:, c] = (values[:, c] - mu) / sigma
    return Dataset(values, data.labels, data.feature_names)


def windows(data: Dataset, mask: ObservationMask, window_size: int):
    """Yield the stream of sparse windows covering all columns in order.

    Emits ceil(D / window_size) windows; the final one may be narrower (no
    padding).  Window indices start at 1.  Unobserved cells carry NaN.
    """
    if window_size < 1:
        raise ValueError(f"window_size must be >= 1, got {window_size}")
    d = data.n_features
    for wi, lo in enumerate(range(0, d, window_size), start=1):
        hi = min(lo + window_size, d)
        observed = mask.mask[:, lo:hi].copy()
        values = data.values[:, lo:hi].copy()
        values[~observed] = np.nan
        yield SparseWindow(wi, list(range(lo, hi)), values, observed)


def save_mask(mask: ObservationMask, path) -> None:
    """Export the observation grid as a CSV of 0/1 for reproducibility audits."""
    np.savetxt(path, mask.mask.astype(np.int8), fmt="%d", delimiter=",")


def load_mask(path, missing_rate: float = float("nan"), seed: int = -1) -> ObservationMask:
    """Re-import a grid written by save_mask. Recipe metadata is caller-supplied."""
    grid = np.loadtxt(path, delimiter=",", dtype=np.int8)
    return ObservationMask(np.atleast_2d(grid).astype(bool), missing_rate, seed)
