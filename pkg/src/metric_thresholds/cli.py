"""Command-line entry points.

Exit codes: 0 success, 1 usage problems, 2 data or configuration
errors, 3 numerical failures.  A ``--config`` file wins over flags, so
a pinned file reproduces a run no matter what else is on the command
line.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import OUTPUT_DIR_ENV, RunConfig, ThresholdConfig
from .dataset import (
    ColumnSchema,
    MetricId,
    corpus_to_obj,
    save_corpus,
    save_corpus_csv,
)
from .errors import ConfigError, InsufficientDataError, ThresholdToolError
from .estimation import (
    build_pairs,
    compute_traces,
    correlation_grid,
    fit_ols,
    leave_one_system_out,
    pairs_from_traces,
    screen_metrics,
)
from .evaluation import compare_nb_models
from .fixtures import data_path, estimate_from_fixture, load_fixture_models
from .pipeline import (
    cd_diagram_obj,
    estimated_threshold_maps,
    evaluate_thresholds,
    fit_record,
    lr_threshold_maps,
    rank_test_obj,
    read_corpus,
    run_pipeline,
    write_csv,
    write_json,
    write_loocv_table,
    write_size_threshold_table,
)
from .synth import generate_synthetic, load_spec

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is taken by data errors here
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _corpus_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--corpus", required=True,
                   help="corpus file: normalized .json, or .csv with --schema")
    p.add_argument("--schema", help="column schema (JSON or key=value) for CSV input")


def _config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; its values override flags")
    p.add_argument("--output-dir",
                   help=f"report directory (default: ${OUTPUT_DIR_ENV} or ./reports)")
    p.add_argument("--risk-increase", type=float, default=None,
                   help="acceptable risk increase over background (default 0.10)")
    p.add_argument("--no-correction", action="store_true",
                   help="skip the imbalance intercept correction")
    p.add_argument("--population-ratio", type=float, default=None,
                   help="population defect ratio (default: computed from corpus)")
    p.add_argument("--pooled-population", action="store_true",
                   help="pool classes for the population ratio instead of "
                        "averaging dataset ratios")
    p.add_argument("--sig-level", type=float, default=None,
                   help="significance level for fits and screening (default 0.05)")
    p.add_argument("--test", choices=("wald", "lrt"), default=None,
                   help="significance test for the slope (default wald)")
    p.add_argument("--exact-spearman", action="store_true",
                   help="exact permutation p-values for correlations (n <= 10)")
    p.add_argument("--seed", type=int, default=None, help="seed recorded in reports")


def build_parser() -> _Parser:
    parser = _Parser(prog="metric-thresholds",
                     description="Defect-risk thresholds for OO metrics")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("load", help="normalize a CSV corpus to JSON")
    _corpus_args(p)
    _config_args(p)
    p.add_argument("--output", help="where to write corpus.json")
    p.set_defaults(func=cmd_load)

    p = sub.add_parser("fit", help="logistic fits and per-version thresholds")
    _corpus_args(p)
    _config_args(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("correlate", help="size-threshold correlation grid")
    _corpus_args(p)
    _config_args(p)
    p.add_argument("--increases", default="0.05,0.10,0.15",
                   help="comma-separated risk increases to sweep")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("estimate",
                       help="screen metrics, fit estimation models, test them")
    _corpus_args(p)
    _config_args(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("loocv", help="leave-one-system-out test thresholds")
    _corpus_args(p)
    _config_args(p)
    p.set_defaults(func=cmd_loocv)

    p = sub.add_parser("evaluate", help="g-mean of thresholds as classifiers")
    _corpus_args(p)
    _config_args(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("nb-compare",
                       help="threshold vs no-threshold Naive Bayes rank test")
    _corpus_args(p)
    _config_args(p)
    p.set_defaults(func=cmd_nb_compare)

    p = sub.add_parser("pipeline", help="run every stage and write the bundle")
    _corpus_args(p)
    _config_args(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("synth", help="generate a corpus from a synthetic spec")
    _config_args(p)
    p.add_argument("--spec", required=True,
                   help="spec file, or the name of a bundled spec")
    p.add_argument("--output", required=True, help="corpus file to write")
    p.add_argument("--format", choices=("csv", "json"), default=None,
                   help="output format (default: from the file suffix)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fixture-estimate",
                       help="threshold from the shipped estimation models")
    p.add_argument("--metric", required=True)
    p.add_argument("--size", required=True, type=int,
                   help="system size in classes")
    p.add_argument("--models", help="alternative models file")
    p.set_defaults(func=cmd_fixture_estimate)

    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    kwargs = {}
    if getattr(args, "risk_increase", None) is not None:
        kwargs["risk_increase"] = args.risk_increase
    if getattr(args, "no_correction", False):
        kwargs["apply_correction"] = False
    if getattr(args, "population_ratio", None) is not None:
        kwargs["population_ratio"] = args.population_ratio
    if getattr(args, "pooled_population", False):
        kwargs["pooled_population"] = True
    if getattr(args, "sig_level", None) is not None:
        kwargs["sig_level"] = args.sig_level
    if getattr(args, "test", None) is not None:
        kwargs["significance_test"] = args.test
    if getattr(args, "exact_spearman", False):
        kwargs["exact_spearman"] = True
    config = RunConfig(
        thresholds=ThresholdConfig(**kwargs),
        seed=args.seed if getattr(args, "seed", None) is not None else 0,
        **(
            {"output_dir": Path(args.output_dir)}
            if getattr(args, "output_dir", None)
            else {}
        ),
    )
    if getattr(args, "config", None):
        config = config.overridden_by_file(args.config)
    return config


def _read_corpus(args: argparse.Namespace):
    schema = ColumnSchema.from_file(args.schema) if args.schema else None
    return read_corpus(args.corpus, schema)


def _out(config: RunConfig) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_load(args: argparse.Namespace) -> int:
    config = _run_config(args)
    corpus = _read_corpus(args)
    target = Path(args.output) if args.output else _out(config) / "corpus.json"
    target.parent.mkdir(parents=True, exist_ok=True)
    save_corpus(corpus, target)
    classes = sum(len(ds.classes) for ds in corpus.datasets)
    print(f"wrote {target}")
    print(
        f"{len(corpus)} datasets, {len(corpus.systems())} systems, "
        f"{classes} classes, metrics: "
        + ", ".join(str(m) for m in corpus.metric_ids)
    )
    return 0


def cmd_fit(args: argparse.Namespace) -> int:
    config = _run_config(args)
    cfg = config.thresholds
    corpus = _read_corpus(args)
    out = _out(config)
    rows = []
    pairs = {}
    for metric in corpus.metric_ids:
        traces = compute_traces(corpus, metric, cfg)
        pairs[metric] = pairs_from_traces(corpus, traces)
        rows.extend(fit_record(t) for t in traces)
    write_json(rows, out / "fit_records.json")
    write_size_threshold_table(out / "size_thresholds.csv", corpus, pairs)
    print(f"wrote {out / 'fit_records.json'}")
    print(f"wrote {out / 'size_thresholds.csv'}")
    return 0


def cmd_correlate(args: argparse.Namespace) -> int:
    config = _run_config(args)
    corpus = _read_corpus(args)
    out = _out(config)
    try:
        increases = [float(v) for v in args.increases.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad --increases value {args.increases!r}") from None
    rows = correlation_grid(corpus, corpus.metric_ids, increases, config.thresholds)
    write_json(rows, out / "correlations.json")
    write_csv(
        out / "correlations.csv",
        ["metric", "risk_increase", "corrected", "rho", "p_value", "n_pairs", "df",
         "status"],
        [[r["metric"], r["risk_increase"], r["corrected"], r["rho"], r["p_value"],
          r["n_pairs"], r["df"], r["status"]] for r in rows],
    )
    print(f"wrote {out / 'correlations.json'}")
    print(f"wrote {out / 'correlations.csv'}")
    return 0


def _screened(corpus, cfg):
    screened = screen_metrics(corpus, corpus.metric_ids, cfg)
    if not screened:
        raise InsufficientDataError("no metric passed the size correlation screen")
    return screened


def cmd_estimate(args: argparse.Namespace) -> int:
    config = _run_config(args)
    cfg = config.thresholds
    corpus = _read_corpus(args)
    out = _out(config)
    screened = _screened(corpus, cfg)
    models = {m: fit_ols(build_pairs(corpus, m, cfg), metric=m) for m in screened}
    write_json(
        {str(m): {"slope": mod.slope, "intercept": mod.intercept,
                  "n_train": mod.n_train} for m, mod in models.items()},
        out / "models.json",
    )
    loocv = {m: leave_one_system_out(corpus, m, cfg) for m in screened}
    write_loocv_table(out / "test_thresholds.csv", corpus, screened, loocv)
    print(f"wrote {out / 'models.json'}")
    print(f"wrote {out / 'test_thresholds.csv'}")
    return 0


def cmd_loocv(args: argparse.Namespace) -> int:
    config = _run_config(args)
    cfg = config.thresholds
    corpus = _read_corpus(args)
    out = _out(config)
    screened = _screened(corpus, cfg)
    loocv = {m: leave_one_system_out(corpus, m, cfg) for m in screened}
    write_loocv_table(out / "test_thresholds.csv", corpus, screened, loocv)
    print(f"wrote {out / 'test_thresholds.csv'}")
    return 0


def _threshold_maps(corpus, cfg, screened):
    pairs = {m: build_pairs(corpus, m, cfg) for m in screened}
    loocv = {m: leave_one_system_out(corpus, m, cfg) for m in screened}
    return lr_threshold_maps(pairs), estimated_threshold_maps(loocv)


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _run_config(args)
    cfg = config.thresholds
    corpus = _read_corpus(args)
    out = _out(config)
    screened = _screened(corpus, cfg)
    lr_maps, est_maps = _threshold_maps(corpus, cfg, screened)
    scores, box_stats = evaluate_thresholds(corpus, screened, lr_maps, est_maps)
    write_csv(
        out / "gmean_scores.csv",
        ["system", "version", "metric", "source", "threshold", "g_mean", "status"],
        [[r["system"], r["version"], r["metric"], r["source"], r["threshold"],
          r["g_mean"], r["status"]] for r in scores],
    )
    write_json(box_stats, out / "box_stats.json")
    print(f"wrote {out / 'gmean_scores.csv'}")
    print(f"wrote {out / 'box_stats.json'}")
    return 0


def cmd_nb_compare(args: argparse.Namespace) -> int:
    config = _run_config(args)
    cfg = config.thresholds
    corpus = _read_corpus(args)
    out = _out(config)
    screened = _screened(corpus, cfg)
    lr_maps, est_maps = _threshold_maps(corpus, cfg, screened)
    report = compare_nb_models(corpus, screened, lr_maps, est_maps)
    write_csv(
        out / "nb_scores.csv",
        ["system", "version", "size", *report.model_names],
        [[row["system"], row["version"], row["size"],
          *(row[name] for name in report.model_names)] for row in report.rows],
    )
    write_json(rank_test_obj(report), out / "rank_test.json")
    write_json(cd_diagram_obj(report), out / "cd_diagram.json")
    print(f"wrote {out / 'nb_scores.csv'}")
    print(f"wrote {out / 'rank_test.json'}")
    print(f"wrote {out / 'cd_diagram.json'}")
    return 0


def cmd_pipeline(args: argparse.Namespace) -> int:
    config = _run_config(args)
    schema = ColumnSchema.from_file(args.schema) if args.schema else None
    result = run_pipeline(config, args.corpus, schema)
    for key, path in result.artifacts.items():
        print(f"wrote {path}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    spec_path = Path(args.spec)
    if not spec_path.exists():
        name = args.spec if args.spec.endswith(".json") else f"{args.spec}.json"
        spec_path = data_path(f"synthetic_specs/{name}")
    spec = load_spec(spec_path)
    corpus = generate_synthetic(spec)
    target = Path(args.output)
    target.parent.mkdir(parents=True, exist_ok=True)
    fmt = args.format or ("json" if target.suffix.lower() == ".json" else "csv")
    if fmt == "json":
        save_corpus(corpus, target)
    else:
        save_corpus_csv(corpus, target)
    classes = sum(len(ds.classes) for ds in corpus.datasets)
    print(f"wrote {target} ({len(corpus)} datasets, {classes} classes)")
    return 0


def cmd_fixture_estimate(args: argparse.Namespace) -> int:
    metric = MetricId(args.metric)
    result = estimate_from_fixture(metric, args.size, args.models)
    model = load_fixture_models(args.models)[metric]
    print(json.dumps(
        {
            "metric": str(metric),
            "size": args.size,
            "slope": model.slope,
            "intercept": model.intercept,
            "raw": result.varl_raw,
            "threshold": result.threshold,
            "clamped": result.clamped,
        },
        indent=2,
    ))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help(sys.stderr)
        return 1
    try:
        return args.func(args)
    except ThresholdToolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        # unreadable corpus, schema, or output path
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
