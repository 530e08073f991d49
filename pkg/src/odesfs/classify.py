"""Built-in classifiers and cross-validation for subset scoring and final evaluation.

All predictors are deterministic given (data, config, seed), with explicit
tie-breaking so results never depend on dict/sort internals:

  knn    - distance ties -> lower row index; vote ties -> smaller summed
           distance, then smaller label id
  cart   - split ties -> lower feature index, then lower threshold;
           leaf ties -> smaller label id
  forest - majority vote over trees, ties -> smaller label id
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ClassifierConfig:
    kind: str = "knn"            # knn | cart | forest
    k_neighbors: int = 3
    n_trees: int = 6
    max_depth: int = 10
    min_samples_split: int = 2
    bootstrap: bool = True       # forest only; off makes n_trees=1 reduce to cart
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("knn", "cart", "forest"):
            raise ValueError(f"unknown classifier kind {self.kind!r}")
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")


# ---------------------------------------------------------------------------
# k-nearest neighbors


def _as_matrix(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    return a.reshape(-1, 1) if a.ndim == 1 else a


def _vote(dist_row: np.ndarray, train_y: np.ndarray, k: int, order: np.ndarray | None = None) -> int:
    # stable sort on distance keeps lower row index first among exact ties
    nearest = (np.argsort(dist_row, kind="stable") if order is None else order)[:k]
    votes: dict[int, int] = {}
    sums: dict[int, float] = {}
    for i in nearest:
        lab = int(train_y[i])
        votes[lab] = votes.get(lab, 0) + 1
        sums[lab] = sums.get(lab, 0.0) + float(dist_row[i])
    best = max(votes.values())
    tied = [lab for lab, v in votes.items() if v == best]
    if len(tied) > 1:
        low = min(sums[lab] for lab in tied)
        tied = [lab for lab in tied if sums[lab] == low]
    return min(tied)


def knn_predict(train_x: np.ndarray, train_y: np.ndarray, query_row: np.ndarray, k: int) -> int:
    """Majority vote among the k nearest training rows (Euclidean).

    Distance ties resolve to the lower train-row index; vote ties to the
    smaller summed distance, then the smaller label id.
    """
    train_x = _as_matrix(train_x)
    n = train_x.shape[0]
    if n == 0:
        raise ValueError("empty train set")
    if k > n:
        raise ValueError(f"k={k} exceeds train size {n}")
    diff = train_x - np.asarray(query_row, dtype=np.float64)
    dist = np.sqrt(np.sum(diff * diff, axis=1))
    return _vote(dist, train_y, k)


def knn_predict_batch(train_x, train_y, query_rows, k: int) -> np.ndarray:
    """Vectorized multi-query variant of knn_predict, identical vote for vote."""
    train_x = _as_matrix(train_x)
    query_rows = _as_matrix(query_rows)
    if train_x.shape[0] == 0:
        raise ValueError("empty train set")
    if k > train_x.shape[0]:
        raise ValueError(f"k={k} exceeds train size {train_x.shape[0]}")
    diff = query_rows[:, None, :] - train_x[None, :, :]
    dists = np.sqrt(np.sum(diff * diff, axis=2))
    return np.array([_vote(row, train_y, k) for row in dists], dtype=np.int64)


# ---------------------------------------------------------------------------
# CART


@dataclass
class _Node:
    label: int = -1              # leaf prediction; -1 for internal nodes
    feature: int = -1
    threshold: float = 0.0
    left: "_Node | None" = None
    right: "_Node | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def _gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - np.sum(p * p))


def _majority(y: np.ndarray) -> int:
    labels, counts = np.unique(y, return_counts=True)
    return int(labels[np.argmax(counts)])  # unique is sorted, argmax takes first max


def _best_split(x: np.ndarray, y: np.ndarray, features, n_labels: int):
    """Lowest weighted child Gini over (feature, midpoint) candidates.

    Ties resolve to the lower feature index, then the lower threshold; the
    feature iteration order must therefore be ascending.
    """
    n = y.size
    best = None  # (score, feature, threshold)
    for f in features:
        col = x[:, f]
        order = np.argsort(col, kind="stable")
        sorted_vals = col[order]
        sorted_y = y[order]
        left_counts = np.zeros(n_labels, dtype=np.int64)
        right_counts = np.bincount(sorted_y, minlength=n_labels).astype(np.int64)
        for i in range(n - 1):
            lab = sorted_y[i]
            left_counts[lab] += 1
            right_counts[lab] -= 1
            if sorted_vals[i] == sorted_vals[i + 1]:
                continue
            thr = 0.5 * (sorted_vals[i] + sorted_vals[i + 1])
            nl = i + 1
            score = (nl * _gini(left_counts) + (n - nl) * _gini(right_counts)) / n
            if best is None or score < best[0]:
                best = (score, f, thr)
    return best


def _grow(x, y, depth, cfg: ClassifierConfig, n_labels: int, rng, mtry) -> _Node:
    if (
        depth >= cfg.max_depth
        or y.size < cfg.min_samples_split
        or np.unique(y).size == 1
    ):
        return _Node(label=_majority(y))
    d = x.shape[1]
    if mtry is not None and mtry < d:
        features = np.sort(rng.choice(d, size=mtry, replace=False))
    else:
        features = range(d)
    split = _best_split(x, y, features, n_labels)
    if split is None:
        return _Node(label=_majority(y))
    _, f, thr = split
    mask = x[:, f] <= thr
    node = _Node(feature=f, threshold=thr)
    node.left = _grow(x[mask], y[mask], depth + 1, cfg, n_labels, rng, mtry)
    node.right = _grow(x[~mask], y[~mask], depth + 1, cfg, n_labels, rng, mtry)
    return node


def cart_fit(train_x: np.ndarray, train_y: np.ndarray, cfg: ClassifierConfig) -> _Node:
    """Grow a Gini-impurity binary tree over midpoint split candidates."""
    train_x = _as_matrix(train_x)
    train_y = np.asarray(train_y, dtype=np.int64)
    if train_y.size == 0:
        raise ValueError("empty train set")
    n_labels = int(train_y.max()) + 1
    return _grow(train_x, train_y, 0, cfg, n_labels, None, None)


def cart_predict(tree: _Node, row: np.ndarray) -> int:
    node = tree
    while not node.is_leaf:
        node = node.left if row[node.feature] <= node.threshold else node.right
    return node.label


# ---------------------------------------------------------------------------
# random forest


@dataclass
class Forest:
    trees: list[_Node] = field(default_factory=list)


def forest_fit(train_x: np.ndarray, train_y: np.ndarray, cfg: ClassifierConfig) -> Forest:
    """Bag n_trees CART trees with per-split ceil(sqrt(D)) feature subsampling.

    With bootstrap disabled, every tree trains on the full sample with all
    features, so n_trees=1 reduces exactly to cart_fit.
    """
    train_x = _as_matrix(train_x)
    train_y = np.asarray(train_y, dtype=np.int64)
    n = train_y.size
    if n == 0:
        raise ValueError("empty train set")
    n_labels = int(train_y.max()) + 1
    d = train_x.shape[1]
    mtry = int(np.ceil(np.sqrt(d))) if d else 0
    forest = Forest()
    for t in range(cfg.n_trees):
        rng = np.random.default_rng(cfg.seed + t)
        if cfg.bootstrap:
            idx = rng.integers(0, n, size=n)
            tree = _grow(train_x[idx], train_y[idx], 0, cfg, n_labels, rng, mtry)
        else:
            tree = _grow(train_x, train_y, 0, cfg, n_labels, rng, None)
        forest.trees.append(tree)
    return forest


def forest_predict(forest: Forest, row: np.ndarray) -> int:
    votes: dict[int, int] = {}
    for tree in forest.trees:
        lab = cart_predict(tree, row)
        votes[lab] = votes.get(lab, 0) + 1
    best = max(votes.values())
    return min(lab for lab, v in votes.items() if v == best)


# ---------------------------------------------------------------------------
# cross-validation


def stratified_folds(y: np.ndarray, folds: int, seed: int) -> list[np.ndarray]:
    """Seeded stratified fold assignment.

    Each class's indices are shuffled and dealt round-robin, so per-fold class
    counts deviate from proportionality by at most one sample.
    """
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    assignment = np.empty(y.size, dtype=np.int64)
    for lab in np.unique(y):
        idx = np.nonzero(y == lab)[0]
        idx = rng.permutation(idx)
        assignment[idx] = np.arange(idx.size) % folds
    return [np.nonzero(assignment == f)[0] for f in range(folds)]


def _fit_predict(train_x, train_y, test_x, cfg: ClassifierConfig) -> np.ndarray:
    if cfg.kind == "knn":
        k = min(cfg.k_neighbors, train_y.size)
        return knn_predict_batch(train_x, train_y, test_x, k)
    if cfg.kind == "cart":
        tree = cart_fit(train_x, train_y, cfg)
        return np.array([cart_predict(tree, row) for row in test_x])
    forest = forest_fit(train_x, train_y, cfg)
    return np.array([forest_predict(forest, row) for row in test_x])


def cross_val_accuracy(
    x: np.ndarray, y: np.ndarray, cfg: ClassifierConfig, folds: int, seed: int
) -> float:
    """Pooled correct/total over seeded stratified folds."""
    x = _as_matrix(x)
    y = np.asarray(y, dtype=np.int64)
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if y.size < folds:
        raise ValueError("fewer samples than folds")
    class_counts = np.bincount(y)
    min_class = int(class_counts[class_counts > 0].min())
    if np.count_nonzero(class_counts) < 2:
        raise ValueError("single-class label vector")
    folds = max(2, min(folds, min_class))
    correct = 0
    for test_idx in stratified_folds(y, folds, seed):
        train_idx = np.setdiff1d(np.arange(y.size), test_idx)
        pred = _fit_predict(x[train_idx], y[train_idx], x[test_idx], cfg)
        correct += int(np.sum(pred == y[test_idx]))
    return correct / y.size
