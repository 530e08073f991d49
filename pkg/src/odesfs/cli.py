"""Command-line interface: run, compare and synth subcommands."""

from __future__ import annotations

import argparse
import json
import sys

from . import dataio, pipeline, synth
from .classify import ClassifierConfig
from .evolve import DeConfig
from .lfa import LfaConfig
from .redundancy import CiConfig

_STRATEGY_NAMES = {"odesfs": "odesfs", "zero-fill": "zero_fill_baseline"}


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="input CSV path")
    p.add_argument("--label-column", default="last",
                   help='label column: 0-based index or "last" (default)')
    p.add_argument("--missing-rate", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--window-size", type=int, default=50)
    p.add_argument("--rank", type=int, default=5, help="latent rank of the completion model")
    p.add_argument("--lambda", dest="lam", type=float, default=0.05, help="regularization weight")
    p.add_argument("--eta", type=float, default=0.01, help="SGD learning rate")
    p.add_argument("--epochs", type=int, default=200, help="max SGD epochs per window")
    p.add_argument("--tol", type=float, default=1e-5, help="relative loss-delta stop threshold")
    p.add_argument("--pop-size", type=int, default=20)
    p.add_argument("--mu", type=float, default=0.5, help="difference-vector scaling factor")
    p.add_argument("--cr", type=float, default=0.9, help="crossover rate")
    p.add_argument("--generations", type=int, default=30)
    p.add_argument("--threshold", type=float, default=0.5, help="gene binarization cut")
    p.add_argument("--alpha", type=float, default=0.05, help="significance level for CI tests")
    p.add_argument("--max-cond", type=int, default=3, help="max conditioning-subset size")
    p.add_argument("--classifier", action="append", choices=["knn", "cart", "forest"],
                   help="final-evaluation classifier; repeatable (default: knn)")
    p.add_argument("--keep-observed", action="store_true",
                   help="pass observed values through the completion untouched")
    p.add_argument("--context-free-de", action="store_true",
                   help="score window subsets without the already-selected columns")
    p.add_argument("--mask-out", help="export the observation mask as CSV of 0/1")
    p.add_argument("--debug-dir", help="dump per-window loss traces, factors and histories")
    p.add_argument("--timing-out", help="write per-phase wall-clock JSON (volatile)")


def _run_config(args, strategy: str) -> pipeline.RunConfig:
    label_column = args.label_column
    if label_column != "last":
        label_column = int(label_column)
    classifiers = tuple(ClassifierConfig(kind=k) for k in (args.classifier or ["knn"]))
    return pipeline.RunConfig(
        data=args.data,
        label_column=label_column,
        missing_rate=args.missing_rate,
        window_size=args.window_size,
        lfa=LfaConfig(
            rank=args.rank,
            lam=args.lam,
            eta=args.eta,
            max_epochs=args.epochs,
            tol=args.tol,
            keep_observed=args.keep_observed,
        ),
        de=DeConfig(
            pop_size=args.pop_size,
            mu=args.mu,
            cr=args.cr,
            generations=args.generations,
            threshold=args.threshold,
        ),
        ci=CiConfig(alpha=args.alpha, max_cond_size=args.max_cond),
        classifiers=classifiers,
        strategy=_STRATEGY_NAMES[strategy],
        master_seed=args.seed,
        output=args.output,
        context_free_de=args.context_free_de,
    )


def _write_or_print(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_run(args) -> int:
    cfg = _run_config(args, args.strategy)
    if args.mask_out:
        data = dataio.load_csv(cfg.data, cfg.label_column)
        mask = dataio.apply_mask(data, cfg.missing_rate, pipeline.derived_seeds(cfg.master_seed)["mask"])
        dataio.save_mask(mask, args.mask_out)
    report = pipeline.run(cfg, debug_dir=args.debug_dir)
    _write_or_print(pipeline.report_to_json(report), args.output)
    if args.plot_data:
        with open(args.plot_data, "w", encoding="utf-8") as fh:
            fh.write(pipeline.emit_plot_data([report]))
    if args.timing_out:
        with open(args.timing_out, "w", encoding="utf-8") as fh:
            json.dump(report.timing_seconds, fh, indent=2, sort_keys=True)
            fh.write("\n")
    phases = ", ".join(f"{k}={v:.2f}s" for k, v in sorted(report.timing_seconds.items()))
    print(f"selected {len(report.selected)} features ({phases})", file=sys.stderr)
    return 0


def _cmd_compare(args) -> int:
    cfg_a = _run_config(args, args.strategy_a)
    cfg_b = _run_config(args, args.strategy_b)
    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    if not seeds:
        raise ValueError("--seeds must list at least one integer")
    report = pipeline.compare(cfg_a, cfg_b, seeds)
    _write_or_print(pipeline.comparison_to_json(report), args.output)
    return 0


def _cmd_synth(args) -> int:
    informative = args.informative
    if "," in informative:
        informative = [int(t) for t in informative.split(",") if t.strip()]
    else:
        informative = int(informative)
    data, planted = synth.make_planted(
        args.rows, args.cols, informative,
        noise=args.noise, seed=args.seed, n_classes=args.classes,
    )
    synth.save_csv(data, args.out)
    print(f"wrote {args.out}: {data.n_samples}x{data.n_features}, "
          f"planted columns {planted}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="odesfs",
        description="Online feature selection over sparse streaming features",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the selection pipeline on one dataset")
    _add_run_options(p_run)
    p_run.add_argument("--strategy", choices=list(_STRATEGY_NAMES), default="odesfs")
    p_run.add_argument("--output", help="report JSON path (default: stdout)")
    p_run.add_argument("--plot-data", help="write long-format plot CSV for this run")
    p_run.set_defaults(func=_cmd_run)

    p_cmp = sub.add_parser("compare", help="paired strategy comparison over seeds")
    _add_run_options(p_cmp)
    p_cmp.add_argument("--strategy-a", choices=list(_STRATEGY_NAMES), default="odesfs")
    p_cmp.add_argument("--strategy-b", choices=list(_STRATEGY_NAMES), default="zero-fill")
    p_cmp.add_argument("--seeds", default="0,1,2,3,4", help="comma-separated master seeds")
    p_cmp.add_argument("--output", help="comparison JSON path (default: stdout)")
    p_cmp.set_defaults(func=_cmd_compare)

    p_syn = sub.add_parser("synth", help="generate a planted-feature dataset CSV")
    p_syn.add_argument("--out", required=True)
    p_syn.add_argument("--rows", type=int, default=300)
    p_syn.add_argument("--cols", type=int, default=60)
    p_syn.add_argument("--informative", default="5",
                       help="count, or comma-separated column ids")
    p_syn.add_argument("--noise", type=float, default=0.5)
    p_syn.add_argument("--seed", type=int, default=0)
    p_syn.add_argument("--classes", type=int, default=2)
    p_syn.set_defaults(func=_cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
