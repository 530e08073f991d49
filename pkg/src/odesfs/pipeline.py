"""End-to-end orchestration: mask, window, impute, evolve, filter, evaluate.

Every run is a pure function of its configuration.  All module seeds derive
from the master seed by fixed offsets (window-indexed where a stage runs per
window), so no two stages ever share a random stream:

    mask            master + 1_000_000
    completion      master + 2_000_000 + window_index
    evolution       master + 3_000_000 + window_index
    fitness folds   master + 4_000_000
    final eval      master + 5_000_000
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import dataio, lfa
from .classify import ClassifierConfig, cross_val_accuracy
from .dataio import Dataset
from .evolve import DeConfig, EvalContext, evolve_window
from .redundancy import CiConfig, SelectedSet, prune_redundant, relevance_check
from .stats import wilcoxon_signed_rank

SPEC_VERSION = 1
SEED_MASK = 1_000_000
SEED_LFA = 2_000_000
SEED_DE = 3_000_000
SEED_FOLDS = 4_000_000
SEED_EVAL = 5_000_000

STRATEGIES = ("odesfs", "zero_fill_baseline")
FITNESS_FOLDS = 3
EVAL_FOLDS = 3


@dataclass(frozen=True)
class RunConfig:
    data: str
    label_column: int | str = "last"
    missing_rate: float = 0.0
    window_size: int = 50
    lfa: lfa.LfaConfig = field(default_factory=lfa.LfaConfig)
    de: DeConfig = field(default_factory=DeConfig)
    ci: CiConfig = field(default_factory=CiConfig)
    classifiers: tuple[ClassifierConfig, ...] = (ClassifierConfig(kind="knn"),)
    strategy: str = "odesfs"
    master_seed: int = 0
    output: str | None = None
    context_free_de: bool = False

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if self.master_seed < 0:
            raise ValueError("master_seed must be non-negative")
        if self.window_size < 1:
            raise ValueError("window_size must be >= 1")
        if isinstance(self.classifiers, list):
            object.__setattr__(self, "classifiers", tuple(self.classifiers))


@dataclass
class WindowTrace:
    window: int
    best_fitness: float
    admitted: list[int]
    pruned: list[int]
    epochs: int


@dataclass
class RunReport:
    selected: list[int]
    windows: list[WindowTrace]
    accuracy: dict[str, float]
    timing_seconds: dict[str, float]
    config: dict
    seeds: dict
    spec_version: int = SPEC_VERSION


def derived_seeds(master_seed: int) -> dict:
    return {
        "master": master_seed,
        "mask": master_seed + SEED_MASK,
        "completion_base": master_seed + SEED_LFA,
        "evolution_base": master_seed + SEED_DE,
        "fitness_folds": master_seed + SEED_FOLDS,
        "final_eval": master_seed + SEED_EVAL,
    }


def _config_echo(cfg: RunConfig) -> dict:
    return {
        "data": cfg.data,
        "label_column": cfg.label_column,
        "missing_rate": cfg.missing_rate,
        "window_size": cfg.window_size,
        "strategy": cfg.strategy,
        "master_seed": cfg.master_seed,
        "context_free_de": cfg.context_free_de,
        # the output path is delivery metadata, not a computation input, and
        # is left out so byte-identity reflects the run itself
        "lfa": {
            "rank": cfg.lfa.rank,
            "lam": cfg.lfa.lam,
            "eta": cfg.lfa.eta,
            "max_epochs": cfg.lfa.max_epochs,
            "tol": cfg.lfa.tol,
            "init_scale": cfg.lfa.init_scale,
            "keep_observed": cfg.lfa.keep_observed,
        },
        "de": {
            "pop_size": cfg.de.pop_size,
            "mu": cfg.de.mu,
            "cr": cfg.de.cr,
            "generations": cfg.de.generations,
            "threshold": cfg.de.threshold,
        },
        "ci": {"alpha": cfg.ci.alpha, "max_cond_size": cfg.ci.max_cond_size},
        "classifiers": [
            {
                "kind": c.kind,
                "k_neighbors": c.k_neighbors,
                "n_trees": c.n_trees,
                "max_depth": c.max_depth,
                "min_samples_split": c.min_samples_split,
                "bootstrap": c.bootstrap,
            }
            for c in cfg.classifiers
        ],
    }


def run(cfg: RunConfig, dataset: Dataset | None = None, debug_dir: str | None = None) -> RunReport:
    """Execute the full selection pipeline and assemble the report.

    A pre-loaded dataset may be passed to skip file IO; cfg.data then only
    labels the report.  With debug_dir set, per-window loss traces, factor
    matrices and evolution histories are dumped as CSVs.
    """
    seeds = derived_seeds(cfg.master_seed)
    data = dataset if dataset is not None else dataio.load_csv(cfg.data, cfg.label_column)
    labels = data.labels

    t0 = time.perf_counter()
    mask = dataio.apply_mask(data, cfg.missing_rate, seeds["mask"])
    std = dataio.standardize_observed(data, mask)

    selected = SelectedSet()
    traces: list[WindowTrace] = []
    timing = {"impute": 0.0, "evolve": 0.0, "filter": 0.0}

    for window in dataio.windows(std, mask, cfg.window_size):
        ti = window.window_index
        try:
            t = time.perf_counter()
            if cfg.strategy == "odesfs":
                lfa_cfg = replace(cfg.lfa, seed=seeds["completion_base"] + ti)
                factors, loss_trace = lfa.train(window, lfa_cfg)
                completed = lfa.complete_window(factors, window, cfg.lfa.keep_observed)
                epochs = len(loss_trace)
            else:
                factors, loss_trace = None, []
                completed = lfa.zero_fill_window(window)
                epochs = 0
            timing["impute"] += time.perf_counter() - t

            t = time.perf_counter()
            sel_matrix = None
            if not cfg.context_free_de and len(selected):
                sel_matrix = selected.matrix()
            ctx = EvalContext(
                completed.values,
                sel_matrix,
                labels,
                classifier=ClassifierConfig(kind="knn", k_neighbors=3),
                folds=FITNESS_FOLDS,
                fold_seed=seeds["fitness_folds"],
            )
            de_cfg = replace(cfg.de, seed=seeds["evolution_base"] + ti)
            best_mask, best_fit, history = evolve_window(completed, ctx, de_cfg)
            timing["evolve"] += time.perf_counter() - t

            t = time.perf_counter()
            admitted = []
            for pos in np.nonzero(best_mask.bits)[0]:
                gid = completed.global_feature_ids[pos]
                col = completed.values[:, pos]
                if relevance_check(col, selected, labels, cfg.ci):
                    selected.add(gid, col, ti)
                    admitted.append(gid)
            before = set(selected.ids)
            selected = prune_redundant(selected, labels, cfg.ci)
            pruned = sorted(before - set(selected.ids))
            timing["filter"] += time.perf_counter() - t
        except Exception as exc:
            raise RuntimeError(f"window {ti}: {exc}") from exc

        traces.append(WindowTrace(ti, best_fit, admitted, pruned, epochs))
        if debug_dir:
            _dump_window_debug(debug_dir, ti, factors, loss_trace, history)

    t = time.perf_counter()
    design = selected.matrix() if len(selected) else np.zeros((data.n_samples, 0))
    accuracy = {}
    for clf in cfg.classifiers:
        clf_seeded = replace(clf, seed=seeds["final_eval"])
        accuracy[clf.kind] = cross_val_accuracy(
            design, labels, clf_seeded, EVAL_FOLDS, seeds["final_eval"]
        )
    timing["evaluate"] = time.perf_counter() - t
    timing["total"] = time.perf_counter() - t0

    return RunReport(
        selected=list(selected.ids),
        windows=traces,
        accuracy=accuracy,
        timing_seconds=timing,
        config=_config_echo(cfg),
        seeds=seeds,
    )


def _dump_window_debug(debug_dir, ti, factors, loss_trace, history):
    os.makedirs(debug_dir, exist_ok=True)
    with open(os.path.join(debug_dir, f"window_{ti:03d}_loss.csv"), "w", encoding="utf-8") as fh:
        fh.write("epoch,loss\n")
        for e, loss in enumerate(loss_trace, start=1):
            fh.write(f"{e},{loss!r}\n")
    if factors is not None:
        np.savetxt(os.path.join(debug_dir, f"window_{ti:03d}_factors_x.csv"), factors.X, delimiter=",")
        np.savetxt(os.path.join(debug_dir, f"window_{ti:03d}_factors_y.csv"), factors.Y, delimiter=",")
    with open(os.path.join(debug_dir, f"window_{ti:03d}_evolution.csv"), "w", encoding="utf-8") as fh:
        fh.write("generation,best_fitness,mean_fitness\n")
        for g, st in enumerate(history):
            fh.write(f"{g},{st.best_fitness!r},{st.mean_fitness!r}\n")


def report_to_dict(report: RunReport, include_timing: bool = False) -> dict:
    out = {
        "spec_version": report.spec_version,
        "config": report.config,
        "seeds": report.seeds,
        "selected": report.selected,
        "n_selected": len(report.selected),
        "windows": [
            {
                "window": w.window,
                "best_fitness": w.best_fitness,
                "admitted": w.admitted,
                "pruned": w.pruned,
                "epochs": w.epochs,
            }
            for w in report.windows
        ],
        "accuracy": report.accuracy,
    }
    if include_timing:
        out["timing_seconds"] = report.timing_seconds
    return out


def report_to_json(report: RunReport, include_timing: bool = False) -> str:
    """Canonical JSON serialization: stable key order, deterministic bytes.

    Timing is volatile and therefore excluded by default; identical configs
    then produce byte-identical documents.
    """
    return json.dumps(report_to_dict(report, include_timing), sort_keys=True, indent=2) + "\n"


@dataclass
class ComparisonReport:
    rows: list[dict]
    wilcoxon: dict
    config_a: dict
    config_b: dict


def compare(cfg_a: RunConfig, cfg_b: RunConfig, seeds: list[int],
            dataset: Dataset | None = None) -> ComparisonReport:
    """Run both configurations over the seed list and pair final accuracies.

    The configs must address the same data; per classifier kind the paired
    differences (A minus B) feed a signed-rank test.  Identical outcomes are
    surfaced as "no difference" rather than an error.
    """
    if cfg_a.data != cfg_b.data or cfg_a.label_column != cfg_b.label_column:
        raise ValueError("compare() needs both configs to address the same data")
    kinds = [c.kind for c in cfg_a.classifiers if c.kind in {c2.kind for c2 in cfg_b.classifiers}]
    rows = []
    diffs: dict[str, list[float]] = {k: [] for k in kinds}
    for seed in seeds:
        rep_a = run(replace(cfg_a, master_seed=seed), dataset=dataset)
        rep_b = run(replace(cfg_b, master_seed=seed), dataset=dataset)
        for kind in kinds:
            acc_a = rep_a.accuracy[kind]
            acc_b = rep_b.accuracy[kind]
            rows.append(
                {
                    "seed": seed,
                    "classifier": kind,
                    "accuracy_a": acc_a,
                    "accuracy_b": acc_b,
                    "diff": acc_a - acc_b,
                    "n_selected_a": len(rep_a.selected),
                    "n_selected_b": len(rep_b.selected),
                }
            )
            diffs[kind].append(acc_a - acc_b)
    tests: dict[str, dict] = {}
    for kind in kinds:
        try:
            res = wilcoxon_signed_rank(diffs[kind])
            tests[kind] = {
                "r_plus": res.r_plus,
                "r_minus": res.r_minus,
                "n_effective": res.n_effective,
                "p_value": res.p_value,
            }
        except ValueError:
            tests[kind] = {"note": "no difference"}
    return ComparisonReport(rows, tests, _config_echo(cfg_a), _config_echo(cfg_b))


def comparison_to_json(report: ComparisonReport) -> str:
    doc = {
        "spec_version": SPEC_VERSION,
        "config_a": report.config_a,
        "config_b": report.config_b,
        "rows": report.rows,
        "wilcoxon": report.wilcoxon,
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def emit_plot_data(reports: list[RunReport]) -> str:
    """Long-format CSV rows ready for accuracy / subset-size plots."""
    if not reports:
        raise ValueError("need at least one report")
    lines = ["dataset,strategy,missing_rate,classifier,accuracy,n_selected,seed"]
    for rep in reports:
        name = os.path.splitext(os.path.basename(str(rep.config["data"])))[0]
        for kind, acc in sorted(rep.accuracy.items()):
            lines.append(
                f"{name},{rep.config['strategy']},{rep.config['missing_rate']!r},"
                f"{kind},{acc!r},{len(rep.selected)},{rep.config['master_seed']}"
            )
    return "\n".join(lines) + "\n"
