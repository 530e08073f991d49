"""Independent reference implementations used to cross-check the package.

Everything here is written from first principles (python loops, exhaustive
enumeration, finite differences, least squares) and never calls into the
code paths it verifies.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def brute_knn(train_x, train_y, query, k):
    """All-pairs-distance nearest-neighbor vote with explicit tie rules."""
    dists = []
    for idx, row in enumerate(train_x):
        d = math.sqrt(sum((float(a) - float(b)) ** 2 for a, b in zip(row, query)))
        dists.append((d, idx))
    dists.sort(key=lambda t: (t[0], t[1]))
    nearest = dists[:k]
    votes = {}
    sums = {}
    for d, idx in nearest:
        lab = int(train_y[idx])
        votes[lab] = votes.get(lab, 0) + 1
        sums[lab] = sums.get(lab, 0.0) + d
    top = max(votes.values())
    tied = [lab for lab, v in votes.items() if v == top]
    if len(tied) > 1:
        low = min(sums[lab] for lab in tied)
        tied = [lab for lab in tied if sums[lab] == low]
    return min(tied)


def gini(labels):
    n = len(labels)
    if n == 0:
        return 0.0
    out = 1.0
    for lab in set(labels):
        p = sum(1 for v in labels if v == lab) / n
        out -= p * p
    return out


def best_split_enum(x, y):
    """Exhaustive (feature, midpoint) search minimizing weighted child Gini.

    Returns (score, feature, threshold) with ties resolved to the lower
    feature index, then the lower threshold; None if nothing splits.
    """
    n, d = len(y), len(x[0])
    best = None
    for f in range(d):
        vals = sorted(set(float(row[f]) for row in x))
        for lo, hi in zip(vals, vals[1:]):
            thr = 0.5 * (lo + hi)
            left = [y[i] for i in range(n) if x[i][f] <= thr]
            right = [y[i] for i in range(n) if x[i][f] > thr]
            score = (len(left) * gini(left) + len(right) * gini(right)) / n
            if best is None or score < best[0]:
                best = (score, f, thr)
    return best


def residual_partial_corr(x, y, cond):
    """Partial correlation as the correlation of least-squares residuals."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    cond = np.asarray(cond, dtype=float)
    if cond.ndim == 1:
        cond = cond.reshape(-1, 1)
    design = np.column_stack([np.ones(x.size), cond])
    rx = x - design @ np.linalg.lstsq(design, x, rcond=None)[0]
    ry = y - design @ np.linalg.lstsq(design, y, rcond=None)[0]
    return float(np.corrcoef(rx, ry)[0, 1])


def exact_wilcoxon_enum(diffs):
    """Two-sided exact signed-rank p by brute enumeration of sign vectors.

    Ranks of |diffs| use mid-rank ties.  p = P(R+ <= m or R+ >= total - m)
    with m the observed min(R+, R-).
    """
    d = [v for v in diffs if v != 0.0]
    n = len(d)
    absd = [abs(v) for v in d]
    order = sorted(range(n), key=lambda i: absd[i])
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and absd[order[j + 1]] == absd[order[i]]:
            j += 1
        mid = (i + j) / 2 + 1
        for t in range(i, j + 1):
            ranks[order[t]] = mid
        i = j + 1
    r_plus = sum(ranks[i] for i in range(n) if d[i] > 0)
    r_minus = sum(ranks[i] for i in range(n) if d[i] < 0)
    total = n * (n + 1) / 2
    m = min(r_plus, r_minus)
    hits = 0
    for signs in itertools.product((0, 1), repeat=n):
        rp = sum(ranks[i] for i in range(n) if signs[i])
        if rp <= m + 1e-9 or rp >= total - m - 1e-9:
            hits += 1
    return r_plus, r_minus, hits / 2**n


def element_loss_formula(f, x, y, lam):
    """The per-cell objective written out longhand, for finite differencing."""
    dot = sum(float(a) * float(b) for a, b in zip(x, y))
    sq = (float(f) - dot) ** 2
    reg = sum(float(a) ** 2 for a in x) + sum(float(b) ** 2 for b in y)
    return 0.5 * sq + 0.5 * lam * reg


def fd_cell_gradient(f, x, y, lam, h=1e-6):
    """Central finite differences of the per-cell objective wrt x and y."""
    x = [float(v) for v in x]
    y = [float(v) for v in y]
    gx, gy = [], []
    for z in range(len(x)):
        xp, xm = list(x), list(x)
        xp[z] += h
        xm[z] -= h
        gx.append((element_loss_formula(f, xp, y, lam) - element_loss_formula(f, xm, y, lam)) / (2 * h))
    for z in range(len(y)):
        yp, ym = list(y), list(y)
        yp[z] += h
        ym[z] -= h
        gy.append((element_loss_formula(f, x, yp, lam) - element_loss_formula(f, x, ym, lam)) / (2 * h))
    return np.array(gx), np.array(gy)
