"""Differential-evolution search over feature subsets of a completed window.

Classic rand/1/bin DE on real genotype vectors in [0, 1]^L:

    donor  = V_a + mu * (V_b - V_c)          a, b, c distinct, != target
    trial  = donor where rand() <= CR or at one forced dimension, else target
    target survives unless the trial's fitness is strictly lower

Genotypes binarize at a threshold into feature masks; a mask's fitness is one
minus the cross-validated accuracy of a classifier trained on the masked
window columns joined with the already-selected feature columns.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .classify import ClassifierConfig, _vote, stratified_folds
from .lfa import CompletedWindow


@dataclass(frozen=True)
class DeConfig:
    pop_size: int = 20           # N
    mu: float = 0.5              # difference-vector scaling factor
    cr: float = 0.9              # crossover rate
    generations: int = 30
    threshold: float = 0.5       # binarization cut
    seed: int = 0

    def __post_init__(self):
        if self.pop_size < 4:
            raise ValueError("pop_size must be >= 4 (mutation draws 3 distinct non-target rows)")
        if not 0.0 <= self.mu <= 2.0:
            raise ValueError("mu must be in [0, 2]")
        if not 0.0 <= self.cr <= 1.0:
            raise ValueError("cr must be in [0, 1]")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must be in (0, 1)")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")


@dataclass
class Individual:
    genes: np.ndarray
    fitness: float | None = None


Population = list[Individual]


@dataclass
class FeatureMask:
    bits: np.ndarray

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=bool)

    @property
    def popcount(self) -> int:
        return int(self.bits.sum())


@dataclass
class GenerationStat:
    best_fitness: float
    mean_fitness: float


@dataclass
class EvalContext:
    """Everything a mask needs to be scored against one completed window."""

    window_values: np.ndarray              # M x L imputed columns
    selected_values: np.ndarray | None     # M x |S_t| columns already retained
    labels: np.ndarray
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    folds: int = 3
    fold_seed: int = 0
    _fold_idx: list[np.ndarray] = field(default_factory=list, repr=False)
    _cache: dict[bytes, float] = field(default_factory=dict, repr=False)
    _base: np.ndarray = field(init=False, repr=False)
    _base_sq: np.ndarray = field(init=False, repr=False)
    _n_selected: int = field(init=False, repr=False)

    def __post_init__(self):
        self.window_values = np.asarray(self.window_values, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.size < self.folds:
            raise ValueError("fewer samples than folds")
        folds = self.folds
        counts = np.bincount(self.labels)
        min_class = int(counts[counts > 0].min())
        folds = max(2, min(folds, min_class))
        self._fold_idx = stratified_folds(self.labels, folds, self.fold_seed)
        # selected columns first, window columns after: one design matrix
        # shared by every mask, indexed per evaluation
        if self.selected_values is not None and self.selected_values.shape[1] > 0:
            self._n_selected = self.selected_values.shape[1]
            self._base = np.hstack([np.asarray(self.selected_values, dtype=np.float64),
                                    self.window_values])
        else:
            self._n_selected = 0
            self._base = self.window_values
        self._base_sq = self._base * self._base


def init_population(length: int, cfg: DeConfig) -> Population:
    """N individuals with genes i.i.d. uniform on [0, 1], fitness unset."""
    if length < 1:
        raise ValueError("genotype length must be >= 1")
    rng = np.random.default_rng(cfg.seed)
    return [Individual(rng.random(length)) for _ in range(cfg.pop_size)]


def draw_donor_indices(pop_size: int, n: int, rng: np.random.Generator) -> tuple[int, int, int]:
    """Three mutually distinct row indices, none equal to the target n."""
    if pop_size < 4:
        raise ValueError("population too small to draw three distinct non-target rows")
    candidates = np.array([i for i in range(pop_size) if i != n])
    a, b, c = rng.choice(candidates, size=3, replace=False)
    return int(a), int(b), int(c)


def combine_donor(va: np.ndarray, vb: np.ndarray, vc: np.ndarray, mu: float) -> np.ndarray:
    """Difference-vector mutant, clamped back into the unit cube."""
    return np.clip(va + mu * (vb - vc), 0.0, 1.0)


def mutate(pop: Population, n: int, cfg: DeConfig, rng: np.random.Generator) -> np.ndarray:
    """Donor genes for target n from three distinct other rows."""
    a, b, c = draw_donor_indices(len(pop), n, rng)
    return combine_donor(pop[a].genes, pop[b].genes, pop[c].genes, cfg.mu)


def crossover(
    target: np.ndarray, donor: np.ndarray, cfg: DeConfig, rng: np.random.Generator
) -> np.ndarray:
    """Binomial crossover with one forced donor dimension."""
    if target.shape != donor.shape:
        raise ValueError("target and donor lengths differ")
    length = target.size
    forced = int(rng.integers(length))
    take = rng.random(length) <= cfg.cr
    take[forced] = True
    return np.where(take, donor, target)


def binarize(genes: np.ndarray, threshold: float) -> FeatureMask:
    """Genes at or above the threshold switch their feature on."""
    return FeatureMask(np.asarray(genes) >= threshold)


def fitness(mask: FeatureMask, ctx: EvalContext) -> float:
    """One minus pooled cross-validated accuracy of the masked design matrix.

    The design matrix is the already-selected columns joined with the window
    columns the mask switches on; its rows are classified by the context's
    KNN over the seeded folds.  No columns at all scores worst (1.0).
    Results are cached per mask within the context.
    """
    key = np.packbits(mask.bits).tobytes()
    cached = ctx._cache.get(key)
    if cached is not None:
        return cached
    cols = np.concatenate(
        [np.arange(ctx._n_selected), ctx._n_selected + np.nonzero(mask.bits)[0]]
    )
    if cols.size == 0:
        ctx._cache[key] = 1.0
        return 1.0
    correct = 0
    all_idx = np.arange(ctx.labels.size)
    k = ctx.classifier.k_neighbors
    sub = ctx._base[:, cols]
    sq = ctx._base_sq[:, cols].sum(axis=1)
    for test_idx in ctx._fold_idx:
        train_idx = np.setdiff1d(all_idx, test_idx)
        ty = ctx.labels[train_idx]
        # |a - b|^2 expanded through one GEMM; tiny negatives are rounding
        d2 = sq[test_idx, None] + sq[None, train_idx] - 2.0 * (sub[test_idx] @ sub[train_idx].T)
        dists = np.sqrt(np.maximum(d2, 0.0))
        orders = np.argsort(dists, axis=1, kind="stable")
        kk = min(k, ty.size)
        for row, order, lab in zip(dists, orders, ctx.labels[test_idx]):
            if _vote(row, ty, kk, order=order) == lab:
                correct += 1
    value = 1.0 - correct / ctx.labels.size
    ctx._cache[key] = value
    return value


def select_survivor(target: Individual, trial: Individual) -> Individual:
    """Greedy one-to-one replacement; ties keep the target."""
    if target.fitness is None or trial.fitness is None:
        raise ValueError("both fitnesses must be set before selection")
    return trial if trial.fitness < target.fitness else target


def evolve_window(
    window: CompletedWindow, ctx: EvalContext, cfg: DeConfig
) -> tuple[FeatureMask, float, list[GenerationStat]]:
    """Run synchronous DE over the window and return the binarized best.

    Donors and targets are read from the generation-start population snapshot,
    so within-generation results do not depend on evaluation order.  The
    history holds one entry for the initial population and one per generation.
    """
    if window.width < 1:
        raise ValueError("window must hold at least one feature")
    rng = np.random.default_rng(cfg.seed)
    pop = init_population(window.width, cfg)
    for ind in pop:
        ind.fitness = fitness(binarize(ind.genes, cfg.threshold), ctx)

    def stat(p: Population) -> GenerationStat:
        fits = [ind.fitness for ind in p]
        return GenerationStat(min(fits), float(np.mean(fits)))

    history = [stat(pop)]
    for _ in range(cfg.generations):
        snapshot = pop
        nxt: Population = []
        for n in range(len(snapshot)):
            donor = mutate(snapshot, n, cfg, rng)
            trial_genes = crossover(snapshot[n].genes, donor, cfg, rng)
            trial = Individual(trial_genes, fitness(binarize(trial_genes, cfg.threshold), ctx))
            nxt.append(select_survivor(snapshot[n], trial))
        pop = nxt
        history.append(stat(pop))

    best = min(range(len(pop)), key=lambda i: (pop[i].fitness, i))
    return binarize(pop[best].genes, cfg.threshold), pop[best].fitness, history
