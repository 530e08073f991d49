"""Wilcoxon signed-rank machinery for paired method comparison.

Zero differences are dropped, the absolute values of the survivors are
ranked ascending with mid-rank ties, and the rank sums of the positive and
negative differences form (R+, R-).  For up to 12 effective pairs the
two-sided p-value comes from the exact null distribution (every one of the
2^n sign assignments equally likely); beyond that a normal approximation
with tie correction is used.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.stats import norm, rankdata

EXACT_LIMIT = 12


@dataclass
class PairedResults:
    """Per-dataset accuracy differences between two methods (A minus B)."""

    diffs: list[float]


class WilcoxonResult(NamedTuple):
    r_plus: float
    r_minus: float
    n_effective: int
    p_value: float


def _exact_p(ranks: np.ndarray, m: float, total: float) -> float:
    """P(R+ <= m or R+ >= total - m) by enumerating all sign assignments."""
    n = ranks.size
    signs = ((np.arange(2**n)[:, None] >> np.arange(n)) & 1).astype(np.float64)
    rplus = signs @ ranks
    eps = 1e-9
    hits = np.sum((rplus <= m + eps) | (rplus >= total - m - eps))
    return float(hits) / 2**n


def wilcoxon_signed_rank(diffs) -> WilcoxonResult:
    """Two-sided signed-rank test of paired differences.

    Returns the positive/negative rank sums, the number of nonzero
    differences, and the p-value.  All-zero differences are an error.
    """
    d = np.asarray(list(diffs), dtype=np.float64)
    if d.size == 0 or not np.all(np.isfinite(d)):
        raise ValueError("diffs must be a non-empty list of finite numbers")
    d = d[d != 0.0]
    n = d.size
    if n == 0:
        raise ValueError("all-zero diffs: the methods are indistinguishable")
    ranks = rankdata(np.abs(d))
    r_plus = float(ranks[d > 0].sum())
    r_minus = float(ranks[d < 0].sum())
    total = n * (n + 1) / 2.0

    if n <= EXACT_LIMIT:
        p = _exact_p(ranks, min(r_plus, r_minus), total)
    else:
        # normal approximation with tie correction on the rank variance
        _, counts = np.unique(np.abs(d), return_counts=True)
        tie_term = np.sum(counts**3 - counts) / 48.0
        var = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term
        z = (r_plus - total / 2.0) / np.sqrt(var)
        p = float(2.0 * norm.sf(abs(z)))
    return WilcoxonResult(r_plus, r_minus, n, min(p, 1.0))
