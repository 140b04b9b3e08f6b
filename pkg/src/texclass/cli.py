"""Command-line interface.

Subcommands:
    extract     compute the 520-column feature cache for a dataset
    experiment  run the configured case sweep and write result files
    report      print correlations / relevance / confusion reports
    classify    score a single seeded permutation of one case

Exit codes: 0 success, 2 configuration error, 3 data error,
4 numerical/estimation error.
"""
from __future__ import annotations

import argparse
import sys

from .config import ExperimentConfig, load_config
from .dataset import load_dataset
from .errors import ConfigError, DataError, EstimationError, SplitError, TexclassError
from .filters import SourceSelection
from .pipeline import (
    FeatureTable,
    filter_correlations,
    load_or_extract_features,
    read_results,
    relevance_report,
    run_case,
    run_experiment,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="texclass",
        description="Texture classification with GLCM features, naive Bayes, "
        "and PCA/genetic feature optimization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_extract = sub.add_parser("extract", help="extract features to a cache file")
    p_extract.add_argument("--dataset", required=True, help="dataset root directory")
    p_extract.add_argument("--out", required=True, help="feature cache CSV path")
    p_extract.add_argument("--levels", type=int, default=64)
    p_extract.add_argument("--workers", type=int, default=1)

    p_exp = sub.add_parser("experiment", help="run the configured sweep")
    p_exp.add_argument("--config", required=True, help="key = value config file")

    p_rep = sub.add_parser("report", help="print a report from result files")
    p_rep.add_argument("kind", choices=["correlations", "relevance", "confusion"])
    p_rep.add_argument("--results", required=True, help="results directory")
    p_rep.add_argument("--stage", default="raw", choices=["raw", "pca", "ga"])
    p_rep.add_argument("--case", type=int, help="case number (confusion report)")
    p_rep.add_argument("--top", type=int, default=0, help="limit relevance rows")

    p_cls = sub.add_parser("classify", help="score one seeded permutation")
    p_cls.add_argument("--cache", required=True, help="feature cache CSV path")
    p_cls.add_argument("--case", type=int, required=True)
    p_cls.add_argument("--seed", type=int, required=True)
    p_cls.add_argument("--train-fraction", type=float, default=0.6)
    p_cls.add_argument("--stages", default="raw,pca,ga")
    return parser


def _cmd_extract(args) -> int:
    config = ExperimentConfig(
        dataset=args.dataset, levels=args.levels, workers=args.workers
    )
    samples = load_dataset(args.dataset)
    table = load_or_extract_features(samples, config, args.out)
    print(f"extracted {len(table.ids)} samples x {len(table.names)} features "
          f"-> {args.out}")
    return 0


def _cmd_experiment(args) -> int:
    config = load_config(args.config)
    results = run_experiment(config)
    for r in results:
        stats = "  ".join(
            f"{stage}={100 * mu:.2f}%+-{100 * sd:.2f}%"
            for stage, (mu, sd) in r.stage_stats.items()
        )
        print(f"case {r.case:2d}: {stats}  nf0={r.nf0} nf_ga={r.nf_ga:.2f}")
    print(f"results written to {config.output}")
    return 0


def _cmd_report(args) -> int:
    results = read_results(args.results)
    if args.kind == "correlations":
        print(f"source-inclusion correlation with stage {args.stage!r} success:")
        for source, r in filter_correlations(results, stage=args.stage):
            print(f"  {source:<10s} {100 * r:+7.2f}%")
    elif args.kind == "relevance":
        ranked = relevance_report(results)
        if args.top:
            ranked = ranked[: args.top]
        print("feature groups by mean GA selection frequency:")
        for rank, (group, freq) in enumerate(ranked, start=1):
            print(f"  {rank:2d}. {group:<14s} {freq:.4f}")
    else:
        with_conf = [r for r in results if r.confusion is not None]
        if args.case is not None:
            with_conf = [r for r in with_conf if r.case == args.case]
        if not with_conf:
            raise DataError("no confusion matrix found for the requested case")
        for r in with_conf:
            conf = r.confusion
            print(f"case {r.case} averaged confusion (rows = real classes):")
            width = max(6, *(len(c) for c in conf.classes)) + 1
            print(" " * width + "".join(f"{c:>{width}}" for c in conf.classes))
            for name, row in zip(conf.classes, conf.counts):
                cells = "".join(f"{v:>{width}.2f}" for v in row)
                print(f"{name:>{width}}" + cells)
    return 0


def _cmd_classify(args) -> int:
    table = FeatureTable.read_csv(args.cache)
    stages = tuple(s.strip() for s in args.stages.split(",") if s.strip())
    config = ExperimentConfig(
        permutations=1,
        seed=args.seed,
        train_fraction=args.train_fraction,
        stages=stages,
        cases=(args.case,),
    )
    result = run_case(table, SourceSelection.from_case(args.case), config)
    for stage, (mu, _sd) in result.stage_stats.items():
        print(f"case {args.case} seed {args.seed} stage {stage}: "
              f"success {100 * mu:.2f}%")
    return 0


_COMMANDS = {
    "extract": _cmd_extract,
    "experiment": _cmd_experiment,
    "report": _cmd_report,
    "classify": _cmd_classify,
}

_EXIT_CODES = [
    (ConfigError, 2),
    (SplitError, 3),
    (DataError, 3),
    (EstimationError, 4),
    (ValueError, 2),
]


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except TexclassError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for klass, code in _EXIT_CODES:
            if isinstance(exc, klass):
                return code
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
