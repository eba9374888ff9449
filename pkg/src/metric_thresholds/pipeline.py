"""End-to-end orchestration: corpus in, report bundle out.

Stages run in a fixed order (fit, correlate, estimate, loocv,
evaluate, nb-compare), each writing its artifacts before the next
starts.  Tables are CSV, nested results JSON, and every run writes a
meta file recording the exact configuration, so a bundle is
reproducible from its own header.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .config import DEFAULT_RISK_INCREASES, RunConfig
from .dataset import (
    Corpus,
    MetricId,
    ColumnSchema,
    corpus_to_obj,
    load_corpus,
    load_corpus_json,
    system_size,
)
from .errors import ConfigError, InsufficientDataError, UndefinedMeasureError
from .estimation import (
    EstimationModel,
    SizeThresholdPair,
    compute_traces,
    pairs_from_traces,
    fit_ols,
    leave_one_system_out,
    screen_metrics,
    correlation_grid,
)
from .evaluation import (
    ComparisonReport,
    compare_nb_models,
    classify_by_threshold,
    confusion_from_predictions,
    g_mean,
)
from .logit import ThresholdResult

__all__ = [
    "PipelineResult",
    "run_pipeline",
    "read_corpus",
    "write_json",
    "write_csv",
    "lr_threshold_maps",
    "estimated_threshold_maps",
]


def read_corpus(path: str | Path, schema: ColumnSchema | None = None) -> Corpus:
    """Read a corpus from normalized JSON or, with a schema, from CSV.

    A CSV whose header starts with the standard columns (system,
    version, class, bugs) needs no schema; the remaining columns are
    taken as metrics.
    """
    path = Path(path)
    if path.suffix.lower() == ".json":
        return load_corpus_json(path)
    if schema is None:
        schema = _standard_schema(path)
    return load_corpus(path, schema)


_STANDARD_COLUMNS = ("system", "version", "class", "bugs")


def _standard_schema(path: Path) -> ColumnSchema:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        header = next(csv.reader(fh), [])
    if tuple(header[:4]) != _STANDARD_COLUMNS or len(header) < 5:
        raise ConfigError(
            f"{path}: CSV input needs a column schema (header does not start "
            f"with {', '.join(_STANDARD_COLUMNS)} plus metric columns)"
        )
    return ColumnSchema(
        system_column="system",
        version_column="version",
        class_column="class",
        bug_column="bugs",
        metrics={c: c for c in header[4:]},
    )


def write_json(obj: Any, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, allow_nan=False)
        fh.write("\n")


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


@dataclass
class PipelineResult:
    """Everything a full run produced, plus where it was written."""

    corpus: Corpus
    pairs: dict[MetricId, list[SizeThresholdPair]] = field(default_factory=dict)
    correlations: list[dict] = field(default_factory=list)
    screened: list[MetricId] = field(default_factory=list)
    models: dict[MetricId, EstimationModel] = field(default_factory=dict)
    loocv: dict[MetricId, dict[tuple[str, str], ThresholdResult]] = field(
        default_factory=dict
    )
    scores: list[dict] = field(default_factory=list)
    box_stats: list[dict] = field(default_factory=list)
    nb_report: ComparisonReport | None = None
    artifacts: dict[str, Path] = field(default_factory=dict)


def lr_threshold_maps(
    pairs: Mapping[MetricId, list[SizeThresholdPair]]
) -> dict[tuple[str, str], dict[MetricId, int]]:
    """Per-version metric->threshold maps from the logistic fits."""
    out: dict[tuple[str, str], dict[MetricId, int]] = {}
    for metric, metric_pairs in pairs.items():
        for p in metric_pairs:
            if p.threshold is not None:
                out.setdefault((p.system_id, p.version_label), {})[metric] = p.threshold
    return out


def estimated_threshold_maps(
    loocv: Mapping[MetricId, Mapping[tuple[str, str], ThresholdResult]]
) -> dict[tuple[str, str], dict[MetricId, int]]:
    out: dict[tuple[str, str], dict[MetricId, int]] = {}
    for metric, per_version in loocv.items():
        for key, result in per_version.items():
            out.setdefault(key, {})[metric] = result.threshold
    return out


def _stage(name: str):
    """Rewrap stage errors so the failing stage is named."""

    class _StageContext:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and isinstance(exc, Exception):
                try:
                    wrapped = exc_type(f"stage {name!r}: {exc}")
                except Exception:
                    return False
                raise wrapped from exc
            return False

    return _StageContext()


def run_pipeline(config: RunConfig, corpus_path: str | Path,
                 schema: ColumnSchema | None = None) -> PipelineResult:
    """Run every stage over the corpus at ``corpus_path``.

    Artifacts land in ``config.output_dir``.  The first stage failure
    stops the run; the raised error names the stage and keeps the
    original exit-code class.
    """
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = config.thresholds

    with _stage("load"):
        corpus = read_corpus(corpus_path, schema)
    result = PipelineResult(corpus=corpus)
    _art(result, "corpus", out / "corpus.json")
    write_json(corpus_to_obj(corpus), result.artifacts["corpus"])

    with _stage("fit"):
        fit_rows = []
        for metric in corpus.metric_ids:
            traces = compute_traces(corpus, metric, cfg)
            result.pairs[metric] = pairs_from_traces(corpus, traces)
            fit_rows.extend(fit_record(t) for t in traces)
        _art(result, "fit_records", out / "fit_records.json")
        write_json(fit_rows, result.artifacts["fit_records"])
        _art(result, "size_thresholds", out / "size_thresholds.csv")
        write_size_threshold_table(
            result.artifacts["size_thresholds"], corpus, result.pairs
        )

    with _stage("correlate"):
        result.correlations = correlation_grid(
            corpus, corpus.metric_ids, DEFAULT_RISK_INCREASES, cfg
        )
        _art(result, "correlations", out / "correlations.json")
        write_json(result.correlations, result.artifacts["correlations"])
        _art(result, "correlations_csv", out / "correlations.csv")
        write_csv(
            result.artifacts["correlations_csv"],
            ["metric", "risk_increase", "corrected", "rho", "p_value", "n_pairs",
             "df", "status"],
            [
                [r["metric"], r["risk_increase"], r["corrected"], r["rho"],
                 r["p_value"], r["n_pairs"], r["df"], r["status"]]
                for r in result.correlations
            ],
        )

    with _stage("estimate"):
        result.screened = screen_metrics(corpus, corpus.metric_ids, cfg)
        if not result.screened:
            raise InsufficientDataError(
                "no metric passed the size correlation screen"
            )
        for metric in result.screened:
            result.models[metric] = fit_ols(result.pairs[metric], metric=metric)
        _art(result, "models", out / "models.json")
        write_json(
            {
                str(m): {
                    "slope": mod.slope,
                    "intercept": mod.intercept,
                    "n_train": mod.n_train,
                }
                for m, mod in result.models.items()
            },
            result.artifacts["models"],
        )

    with _stage("loocv"):
        for metric in result.screened:
            result.loocv[metric] = leave_one_system_out(corpus, metric, cfg)
        _art(result, "test_thresholds", out / "test_thresholds.csv")
        write_loocv_table(
            result.artifacts["test_thresholds"], corpus, result.screened, result.loocv
        )

    lr_maps = lr_threshold_maps(
        {m: result.pairs[m] for m in result.screened}
    )
    est_maps = estimated_threshold_maps(result.loocv)

    with _stage("evaluate"):
        result.scores, result.box_stats = evaluate_thresholds(
            corpus, result.screened, lr_maps, est_maps
        )
        _art(result, "gmean_scores", out / "gmean_scores.csv")
        write_csv(
            result.artifacts["gmean_scores"],
            ["system", "version", "metric", "source", "threshold", "g_mean", "status"],
            [
                [r["system"], r["version"], r["metric"], r["source"],
                 r["threshold"], r["g_mean"], r["status"]]
                for r in result.scores
            ],
        )
        _art(result, "box_stats", out / "box_stats.json")
        write_json(result.box_stats, result.artifacts["box_stats"])

    with _stage("nb-compare"):
        result.nb_report = compare_nb_models(
            corpus, result.screened, lr_maps, est_maps
        )
        _art(result, "nb_scores", out / "nb_scores.csv")
        write_csv(
            result.artifacts["nb_scores"],
            ["system", "version", "size", *result.nb_report.model_names],
            [
                [row["system"], row["version"], row["size"],
                 *(row[name] for name in result.nb_report.model_names)]
                for row in result.nb_report.rows
            ],
        )
        _art(result, "rank_test", out / "rank_test.json")
        write_json(rank_test_obj(result.nb_report), result.artifacts["rank_test"])
        _art(result, "cd_diagram", out / "cd_diagram.json")
        write_json(cd_diagram_obj(result.nb_report), result.artifacts["cd_diagram"])

    _art(result, "run_meta", out / "run_meta.json")
    write_json(
        {
            "config": config.to_dict(),
            "tool_version": __version__,
            "kernel_backend": BACKEND,
            "corpus": str(corpus_path),
            "datasets": len(corpus),
            "screened_metrics": [str(m) for m in result.screened],
            "artifacts": {k: str(v) for k, v in result.artifacts.items()},
        },
        result.artifacts["run_meta"],
    )
    return result


def _art(result: PipelineResult, key: str, path: Path) -> None:
    result.artifacts[key] = path


def fit_record(trace) -> dict:
    fit = trace.fit
    rec = {
        "system": trace.system_id,
        "version": trace.version_label,
        "metric": str(trace.metric),
        "size": trace.size,
        "status": trace.status,
        "threshold": trace.result.threshold if trace.result else "x",
    }
    if fit is not None:
        rec.update(
            alpha=fit.alpha,
            beta=fit.beta,
            se_beta=fit.se_beta,
            p_value=fit.p_value_beta,
            n=fit.n,
            converged=fit.converged,
            separated=fit.separation_detected,
        )
    if trace.alpha_used is not None:
        rec["alpha_hat"] = trace.alpha_used
    if trace.risk is not None:
        rec["p0"] = trace.risk.p0
        rec["p_arl"] = trace.risk.p_arl
    if trace.varl_raw is not None:
        rec["varl_raw"] = trace.varl_raw
    if trace.result is not None:
        rec["clamped"] = trace.result.clamped
    if trace.detail:
        rec["detail"] = trace.detail
    return rec


def write_size_threshold_table(
    path: Path, corpus: Corpus, pairs: Mapping[MetricId, list[SizeThresholdPair]]
) -> None:
    by_key: dict[tuple[str, str], dict[MetricId, SizeThresholdPair]] = {}
    for metric, metric_pairs in pairs.items():
        for p in metric_pairs:
            by_key.setdefault((p.system_id, p.version_label), {})[metric] = p
    metrics = list(pairs)
    rows = []
    for ds in corpus.datasets:
        per = by_key.get(ds.key, {})
        rows.append(
            [ds.system_id, ds.version_label, system_size(ds)]
            + [
                per[m].threshold if m in per and per[m].threshold is not None else "x"
                for m in metrics
            ]
        )
    write_csv(path, ["system", "version", "size", *(str(m) for m in metrics)], rows)


def write_loocv_table(
    path: Path,
    corpus: Corpus,
    screened: Sequence[MetricId],
    loocv: Mapping[MetricId, Mapping[tuple[str, str], ThresholdResult]],
) -> None:
    rows = []
    for ds in corpus.datasets:
        row = [ds.system_id, ds.version_label, system_size(ds)]
        for metric in screened:
            res = loocv[metric].get(ds.key)
            row.append(res.threshold if res is not None else "x")
        rows.append(row)
    write_csv(path, ["system", "version", "size", *(str(m) for m in screened)], rows)


def evaluate_thresholds(
    corpus: Corpus,
    screened: Sequence[MetricId],
    lr_maps: Mapping[tuple[str, str], Mapping[MetricId, int]],
    est_maps: Mapping[tuple[str, str], Mapping[MetricId, int]],
) -> tuple[list[dict], list[dict]]:
    """Score each threshold directly as a one-metric classifier."""
    scores: list[dict] = []
    collected: dict[tuple[str, str], list[float]] = {}
    for ds in corpus.datasets:
        truth = np.array([rec.faulty for rec in ds.classes], dtype=bool)
        for source, maps in (("lr", lr_maps), ("estimated", est_maps)):
            per = maps.get(ds.key, {})
            for metric in screened:
                row = {
                    "system": ds.system_id,
                    "version": ds.version_label,
                    "metric": str(metric),
                    "source": source,
                    "threshold": None,
                    "g_mean": None,
                    "status": "no-threshold",
                }
                if metric in per:
                    values = [rec.value(metric) for rec in ds.classes]
                    predicted = classify_by_threshold(values, per[metric])
                    row["threshold"] = per[metric]
                    try:
                        score = g_mean(confusion_from_predictions(truth, predicted))
                        row["g_mean"] = score
                        row["status"] = "ok"
                        collected.setdefault((str(metric), source), []).append(score)
                    except UndefinedMeasureError as exc:
                        row["status"] = f"undefined: {exc}"
                scores.append(row)

    box_stats = []
    for (metric, source), values in sorted(collected.items()):
        v = np.sort(np.array(values))
        box_stats.append(
            {
                "metric": metric,
                "source": source,
                "n": int(v.size),
                "min": float(v[0]),
                "q1": float(np.percentile(v, 25)),
                "median": float(np.percentile(v, 50)),
                "q3": float(np.percentile(v, 75)),
                "max": float(v[-1]),
            }
        )
    return scores, box_stats


def rank_test_obj(report: ComparisonReport) -> dict:
    rt = report.rank_test
    return {
        "method": rt.method,
        "statistic": rt.statistic,
        "df": rt.df,
        "p_value": rt.p_value,
        "n_blocks": rt.n_blocks,
        "dropped_blocks": rt.dropped_blocks,
        "avg_ranks": rt.avg_ranks,
        "nemenyi_cd": rt.nemenyi_cd,
        "significant_pairs": [
            {"a": a, "b": b, "significant": sig}
            for (a, b), sig in sorted(rt.pairwise_significant.items())
        ],
    }


def cd_diagram_obj(report: ComparisonReport) -> dict:
    """Plot-ready critical-difference data: ranked models plus bars."""
    rt = report.rank_test
    ordered = sorted(rt.avg_ranks.items(), key=lambda kv: kv[1])
    names = [name for name, _ in ordered]
    ranks = [rank for _, rank in ordered]
    spans = []
    for i in range(len(names)):
        j = i
        while j + 1 < len(names) and ranks[j + 1] - ranks[i] < rt.nemenyi_cd:
            j += 1
        if j > i:
            spans.append((i, j))
    # keep only maximal spans; containment is tested on positions, not
    # rank values, so fully tied models still collapse to one bar
    maximal = [
        (i, j)
        for i, j in spans
        if not any((oi, oj) != (i, j) and oi <= i and j <= oj for oi, oj in spans)
    ]
    return {
        "models": [{"name": n, "avg_rank": r} for n, r in ordered],
        "cd": rt.nemenyi_cd,
        "bars": [
            {"from": names[i], "to": names[j],
             "rank_from": ranks[i], "rank_to": ranks[j]}
            for i, j in maximal
        ],
    }
