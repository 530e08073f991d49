"""Rank-H latent factor completion of a sparse window, trained by SGD.

Each window is modeled as the product X @ Y.T of two thin factor matrices
fitted only on observed cells.  The per-cell objective is

    loss(f, x, y) = 0.5 * (f - x . y)^2 + (lam / 2) * (|x|^2 + |y|^2)

and one SGD step on an observed cell (m, j) moves both factor rows along the
negative gradient, using the pre-update x row for the y update:

    x <- x + eta * (err * y - lam * x)
    y <- y + eta * (err * x_cached - lam * y)      err = f - x . y
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numba import njit

from .dataio import SparseWindow

DIVERGENCE_LIMIT = 1e6


class DivergenceError(RuntimeError):
    """A factor entry left the finite training regime (learning rate too large)."""


@dataclass(frozen=True)
class LfaConfig:
    rank: int = 5                # H, latent dimensionality
    lam: float = 0.05            # regularization weight
    eta: float = 0.01            # SGD learning rate
    max_epochs: int = 200
    tol: float = 1e-5            # relative loss-delta stopping threshold
    init_scale: float = 0.04
    seed: int = 0
    keep_observed: bool = False  # pass observed values through in completion

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if self.eta <= 0:
            raise ValueError("eta must be > 0")
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.tol < 0:
            raise ValueError("tol must be >= 0")
        if self.init_scale <= 0:
            raise ValueError("init_scale must be > 0")


@dataclass
class LatentFactors:
    """Factor matrices X (M x H) and Y (width x H)."""

    X: np.ndarray
    Y: np.ndarray

    @property
    def rank(self) -> int:
        return self.X.shape[1]


@dataclass
class CompletedWindow:
    """Dense reconstruction of one window, every cell finite."""

    window_index: int
    global_feature_ids: list[int]
    values: np.ndarray

    @property
    def width(self) -> int:
        return self.values.shape[1]


def init_factors(n_samples: int, width: int, cfg: LfaConfig) -> LatentFactors:
    """Draw factor entries i.i.d. uniform on (0, init_scale], seeded.

    X is drawn before Y from the same stream, so the result is a pure
    function of (seed, n_samples, width, rank).
    """
    if n_samples < 1 or width < 1:
        raise ValueError("factor shapes must be at least 1x1")
    rng = np.random.default_rng(cfg.seed)
    # 1 - random() lies in (0, 1], keeping entries strictly positive
    x = cfg.init_scale * (1.0 - rng.random((n_samples, cfg.rank)))
    y = cfg.init_scale * (1.0 - rng.random((width, cfg.rank)))
    return LatentFactors(x, y)


def element_loss(f: float, x_row, y_row, lam: float) -> float:
    """Regularized squared reconstruction loss of a single observed cell."""
    x = np.asarray(x_row, dtype=np.float64)
    y = np.asarray(y_row, dtype=np.float64)
    err = f - float(x @ y)
    return 0.5 * err * err + 0.5 * lam * (float(x @ x) + float(y @ y))


@njit(cache=True)
def _sgd_cells(X, Y, rows, cols, vals, order, eta, lam):
    """Sequential per-cell SGD sweep. Returns 0, or 1 on divergence."""
    h = X.shape[1]
    for t in range(order.size):
        i = order[t]
        m = rows[i]
        j = cols[i]
        dot = 0.0
        for z in range(h):
            dot += X[m, z] * Y[j, z]
        err = vals[i] - dot
        for z in range(h):
            xm = X[m, z]
            xn = xm + eta * (err * Y[j, z] - lam * xm)
            yn = Y[j, z] + eta * (err * xm - lam * Y[j, z])
            X[m, z] = xn
            Y[j, z] = yn
            if not (np.isfinite(xn) and np.isfinite(yn)):
                return 1
            if abs(xn) > DIVERGENCE_LIMIT or abs(yn) > DIVERGENCE_LIMIT:
                return 1
    return 0


def _observed_cells(window: SparseWindow):
    rows, cols = np.nonzero(window.observed)
    return rows, cols, window.values[rows, cols]


def _window_loss(factors: LatentFactors, rows, cols, vals, lam: float) -> float:
    """Sum of per-cell losses over the observed cells."""
    if rows.size == 0:
        return 0.0
    xr = factors.X[rows]
    yr = factors.Y[cols]
    res = vals - np.einsum("ij,ij->i", xr, yr)
    reg = np.einsum("ij,ij->i", xr, xr) + np.einsum("ij,ij->i", yr, yr)
    return float(0.5 * np.sum(res * res) + 0.5 * lam * np.sum(reg))


def window_loss(factors: LatentFactors, window: SparseWindow, lam: float) -> float:
    """Summed element loss of the window's observed cells."""
    rows, cols, vals = _observed_cells(window)
    return _window_loss(factors, rows, cols, vals, lam)


def sgd_epoch(
    factors: LatentFactors,
    window: SparseWindow,
    cfg: LfaConfig,
    rng: np.random.Generator | None = None,
) -> tuple[LatentFactors, float]:
    """Run one SGD epoch over the window's observed cells, in place.

    Cells are visited in a seeded-shuffle order (from `rng`, or a fresh
    generator seeded with cfg.seed).  Returns the factors and the summed
    per-cell loss measured after the epoch.
    """
    m, h = factors.X.shape
    w = factors.Y.shape[0]
    if (m, w) != (window.n_samples, window.width) or h != cfg.rank:
        raise ValueError("factor shapes do not match the window")
    rows, cols, vals = _observed_cells(window)
    if rows.size:
        if rng is None:
            rng = np.random.default_rng(cfg.seed)
        order = rng.permutation(rows.size)
        status = _sgd_cells(factors.X, factors.Y, rows, cols, vals, order, cfg.eta, cfg.lam)
        if status != 0:
            raise DivergenceError(
                f"factor entry exceeded {DIVERGENCE_LIMIT:g} or became non-finite; "
                "reduce the learning rate"
            )
    return factors, _window_loss(factors, rows, cols, vals, cfg.lam)


def train(window: SparseWindow, cfg: LfaConfig) -> tuple[LatentFactors, list[float]]:
    """Fit fresh factors to one window; returns them with the per-epoch losses.

    Stops after max_epochs, or as soon as the loss delta falls below
    tol * max(1, previous loss).  The pre-training loss seeds the first delta
    check, so tol = inf runs exactly one epoch.
    """
    factors = init_factors(window.n_samples, window.width, cfg)
    rows, cols, vals = _observed_cells(window)
    rng = np.random.default_rng(cfg.seed)
    prev = _window_loss(factors, rows, cols, vals, cfg.lam)
    trace: list[float] = []
    for _ in range(cfg.max_epochs):
        factors, loss = sgd_epoch(factors, window, cfg, rng)
        trace.append(loss)
        if abs(loss - prev) <= cfg.tol * max(1.0, prev):
            break
        prev = loss
    return factors, trace


def complete_window(
    factors: LatentFactors, window: SparseWindow, keep_observed: bool = False
) -> CompletedWindow:
    """Reconstruct the window as X @ Y.T.

    By default every cell, observed or not, takes the reconstruction; with
    keep_observed the observed values pass through untouched.
    """
    values = factors.X @ factors.Y.T
    if keep_observed:
        values = np.where(window.observed, window.values, values)
    return CompletedWindow(window.window_index, list(window.global_feature_ids), values)


def zero_fill_window(window: SparseWindow) -> CompletedWindow:
    """Baseline completion: observed values pass through, missing cells become 0."""
    values = np.where(window.observed, window.values, 0.0)
    return CompletedWindow(window.window_index, list(window.global_feature_ids), values)


def factors_like(factors: LatentFactors) -> LatentFactors:
    """Deep copy, for before/after comparisons in diagnostics."""
    return replace(factors, X=factors.X.copy(), Y=factors.Y.copy())
