"""Conditional-independence relevance admission and redundancy pruning.

Dependence between a feature column and the (numerically encoded) class
labels is measured by partial correlation given a conditioning subset of
already-selected columns, tested for significance with the Fisher Z
transform:

    z = 0.5 * ln((1 + r) / (1 - r))
    stat = sqrt(n - |cond| - 3) * |z|
    p = 2 * (1 - Phi(stat))

A candidate joins the selected set only if no tested conditioning subset
renders it independent of the labels; a retained feature is dropped as soon
as some subset of the others does.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm


class InsufficientSamplesError(ValueError):
    """Too few rows for the requested conditioning-set size."""


@dataclass(frozen=True)
class CiConfig:
    alpha: float = 0.05
    max_cond_size: int = 3
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if self.max_cond_size < 0:
            raise ValueError("max_cond_size must be >= 0")


@dataclass
class SelectedSet:
    """Ordered retained features with the imputed columns frozen at admission."""

    ids: list[int] = field(default_factory=list)
    columns: list[np.ndarray] = field(default_factory=list)
    admission_window: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, feature_id: int) -> bool:
        return feature_id in self.ids

    def add(self, feature_id: int, column: np.ndarray, window_index: int) -> None:
        if feature_id in self.ids:
            raise ValueError(f"feature {feature_id} already selected")
        self.ids.append(feature_id)
        self.columns.append(np.asarray(column, dtype=np.float64))
        self.admission_window.append(window_index)

    def remove(self, feature_id: int) -> None:
        i = self.ids.index(feature_id)
        del self.ids[i], self.columns[i], self.admission_window[i]

    def matrix(self) -> np.ndarray:
        """Columns stacked in admission order, M x |S|."""
        if not self.columns:
            return np.empty((0, 0))
        return np.column_stack(self.columns)

    def copy(self) -> "SelectedSet":
        return SelectedSet(list(self.ids), [c.copy() for c in self.columns], list(self.admission_window))


class _Degenerate(Exception):
    pass


def _recursive_pcorr(corr: np.ndarray, i: int, j: int, cond: tuple, memo: dict) -> float:
    """Classic recursion: condition out the last variable of the subset."""
    key = (i, j, cond)
    if key in memo:
        return memo[key]
    if not cond:
        r = corr[i, j]
    else:
        z, rest = cond[-1], cond[:-1]
        r_ij = _recursive_pcorr(corr, i, j, rest, memo)
        r_iz = _recursive_pcorr(corr, i, z, rest, memo)
        r_jz = _recursive_pcorr(corr, j, z, rest, memo)
        denom = (1.0 - r_iz * r_iz) * (1.0 - r_jz * r_jz)
        if denom <= 1e-24:
            # a variable is collinear with the conditioning set
            raise _Degenerate
        r = (r_ij - r_iz * r_jz) / np.sqrt(denom)
    memo[key] = r
    return r


def partial_correlation(x, y, cond=None) -> tuple[float, bool]:
    """Partial correlation of x and y given the columns of cond.

    Uses the recursive partial-correlation formula on the Pearson correlation
    matrix of the stacked columns; with an empty conditioning set this is the
    plain Pearson correlation.  Returns (r, degenerate); a zero-variance
    column, or collinearity inside the conditioning set, yields r = 0 with
    the degenerate flag raised.  |r| is clipped below 1 so the z-transform
    stays finite.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    cond = np.empty((x.size, 0)) if cond is None else np.asarray(cond, dtype=np.float64)
    if cond.ndim == 1:
        cond = cond.reshape(-1, 1) if cond.size else cond.reshape(x.size, 0)
    k = cond.shape[1]
    if x.size != y.size or (k and cond.shape[0] != x.size):
        raise ValueError("column lengths differ")
    if x.size <= k + 3:
        raise InsufficientSamplesError(
            f"need more than |cond| + 3 = {k + 3} samples, got {x.size}"
        )
    data = np.column_stack([x, y, cond])
    if np.any(np.std(data, axis=0) == 0.0):
        return 0.0, True
    corr = np.corrcoef(data, rowvar=False)
    try:
        r = _recursive_pcorr(corr, 0, 1, tuple(range(2, 2 + k)), {})
    except _Degenerate:
        return 0.0, True
    r = float(np.clip(r, -(1.0 - 1e-12), 1.0 - 1e-12))
    return r, False


def fisher_z_test(r: float, n_samples: int, cond_size: int, alpha: float) -> tuple[float, bool]:
    """Two-sided significance of a (partial) correlation.

    Returns (p_value, independent); independence is declared strictly above
    alpha, so p = alpha still counts as dependent.
    """
    dof = n_samples - cond_size - 3
    if dof < 1:
        raise InsufficientSamplesError(
            f"need n - cond_size - 3 >= 1, got {n_samples} - {cond_size} - 3"
        )
    r = float(np.clip(r, -(1.0 - 1e-12), 1.0 - 1e-12))
    z = 0.5 * np.log((1.0 + r) / (1.0 - r))
    stat = np.sqrt(dof) * abs(z)
    p = float(2.0 * norm.sf(stat))
    return p, p > alpha


def _conditioning_subsets(n_items: int, max_size: int):
    """All index subsets up to max_size: smallest first, lexicographic within size."""
    for size in range(min(n_items, max_size) + 1):
        yield from itertools.combinations(range(n_items), size)


def _any_subset_independent(x, target, cond_columns: list[np.ndarray], cfg: CiConfig) -> bool:
    """True if some conditioning subset of cond_columns renders x and target
    independent.

    One correlation matrix over [x, target, *cond_columns] serves every
    subset; the recursion memo is shared across subsets.  Sample-size
    failures count as 'cannot reject dependence'; degenerate tests (zero
    variance, collinear conditioning) count as independent, matching
    partial_correlation semantics.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    target = np.asarray(target, dtype=np.float64).ravel()
    n = x.size
    data = np.column_stack([x, target, *cond_columns])
    zero_var = np.std(data, axis=0) == 0.0
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.corrcoef(data, rowvar=False)
    memo: dict = {}
    for subset in _conditioning_subsets(len(cond_columns), cfg.max_cond_size):
        k = len(subset)
        if n - k - 3 < 1:
            continue  # too few samples: cannot reject dependence at this size
        if zero_var[0] or zero_var[1] or any(zero_var[2 + i] for i in subset):
            return True  # degenerate: r = 0 is indistinguishable from independence
        try:
            r = _recursive_pcorr(corr, 0, 1, tuple(2 + i for i in subset), memo)
        except _Degenerate:
            return True
        r = float(np.clip(r, -(1.0 - 1e-12), 1.0 - 1e-12))
        _, indep = fisher_z_test(r, n, k, cfg.alpha)
        if indep:
            return True
    return False


def relevance_check(candidate, selected: SelectedSet, labels, cfg: CiConfig) -> bool:
    """Admit the candidate iff every tested conditioning subset leaves it
    dependent on the labels.

    Subsets of the selected columns are tested up to cfg.max_cond_size,
    starting with the empty set, so a candidate failing the marginal test is
    always rejected.
    """
    target = np.asarray(labels, dtype=np.float64).ravel()
    return not _any_subset_independent(candidate, target, list(selected.columns), cfg)


def prune_redundant(selected: SelectedSet, labels, cfg: CiConfig) -> SelectedSet:
    """Drop each retained feature that some subset of the others makes
    conditionally independent of the labels.

    One pass in admission order with immediate removal, so later tests run
    against the already-reduced set.  Returns a new SelectedSet.
    """
    target = np.asarray(labels, dtype=np.float64).ravel()
    pruned = selected.copy()
    for fid in list(pruned.ids):
        pos = pruned.ids.index(fid)
        col = pruned.columns[pos]
        others = [c for i, c in enumerate(pruned.columns) if i != pos]
        if _any_subset_independent(col, target, others, cfg):
            pruned.remove(fid)
    return pruned
