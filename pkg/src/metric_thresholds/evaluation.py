"""Threshold evaluation: g-mean scoring, Naive Bayes, and rank tests.

Thresholds are judged two ways.  Directly: classify a class as faulty
when its metric value reaches the threshold and score the prediction
with the geometric mean of recall and specificity, which does not
reward drowning the minority class.  Indirectly: binarize features at
the thresholds, train Naive Bayes on them, and compare against Naive
Bayes on the raw values via leave-one-out cross-validation, with
Friedman / Skillings-Mack rank tests plus Nemenyi critical distances
across datasets.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import stats as _scipy_stats

from . import _kernels
from .dataset import Corpus, MetricId, SystemDataset
from .errors import (
    ConfigError,
    DegenerateOutcomeError,
    InsufficientDataError,
    UndefinedMeasureError,
    UnsupportedDesignError,
)
from .ranking import average_ranks

__all__ = [
    "ConfusionMatrix",
    "NaiveBayesModel",
    "RankTestResult",
    "ComparisonReport",
    "classify_by_threshold",
    "g_mean",
    "binarize_features",
    "nb_fit",
    "nb_predict",
    "nb_posterior",
    "loocv_nb",
    "friedman_test",
    "nemenyi_cd",
    "compare_nb_models",
    "NB_MODEL_NAMES",
]

#: Fewest records a within-dataset cross-validation will accept.
MIN_EVAL_SIZE = 10

#: Variance floor for Gaussian likelihoods (degenerate features).
VAR_FLOOR = 1e-9

#: Column names of the three-way model comparison, report order.
NB_MODEL_NAMES = ("nb-raw", "nb-lr-thresholds", "nb-estimated-thresholds")

# Studentized-range-based q constants at alpha=0.05 for k=2..10, as used
# with the critical-difference formula.
_NEMENYI_Q_05 = {
    2: 1.960,
    3: 2.343,
    4: 2.569,
    5: 2.728,
    6: 2.850,
    7: 2.949,
    8: 3.031,
    9: 3.102,
    10: 3.164,
}


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def recall(self) -> float:
        if self.tp + self.fn == 0:
            raise UndefinedMeasureError("no faulty classes in the ground truth")
        return self.tp / (self.tp + self.fn)

    @property
    def specificity(self) -> float:
        if self.tn + self.fp == 0:
            raise UndefinedMeasureError("no clean classes in the ground truth")
        return self.tn / (self.tn + self.fp)


def confusion_from_predictions(
    truth: np.ndarray, predicted: np.ndarray
) -> ConfusionMatrix:
    truth = np.asarray(truth, dtype=bool)
    predicted = np.asarray(predicted, dtype=bool)
    if truth.shape != predicted.shape:
        raise ValueError("truth and prediction lengths differ")
    return ConfusionMatrix(
        tp=int(np.sum(truth & predicted)),
        fp=int(np.sum(~truth & predicted)),
        tn=int(np.sum(~truth & ~predicted)),
        fn=int(np.sum(truth & ~predicted)),
    )


def classify_by_threshold(
    values: Sequence[float] | np.ndarray, threshold: int
) -> np.ndarray:
    """Predict faulty exactly where the metric value reaches the threshold."""
    return np.asarray(values) >= threshold


def g_mean(cm: ConfusionMatrix) -> float:
    """Geometric mean of recall and specificity."""
    return math.sqrt(cm.recall * cm.specificity)


def binarize_features(
    d: SystemDataset,
    thresholds: Mapping[MetricId, int],
    metrics: Sequence[MetricId] | None = None,
) -> np.ndarray:
    """Per-class 0/1 matrix: 1 where the metric value reaches its threshold.

    Column order follows ``metrics`` (default: sorted threshold keys).
    """
    if metrics is None:
        metrics = sorted(thresholds)
    missing = [m for m in metrics if m not in thresholds]
    if missing:
        raise ConfigError(
            "no threshold for " + ", ".join(str(m) for m in missing)
        )
    out = np.empty((len(d.classes), len(metrics)), dtype=np.float64)
    for j, metric in enumerate(metrics):
        t = thresholds[metric]
        for i, rec in enumerate(d.classes):
            out[i, j] = 1.0 if rec.value(metric) >= t else 0.0
    return out


def raw_features(
    d: SystemDataset, metrics: Sequence[MetricId]
) -> np.ndarray:
    out = np.empty((len(d.classes), len(metrics)), dtype=np.float64)
    for j, metric in enumerate(metrics):
        for i, rec in enumerate(d.classes):
            out[i, j] = rec.value(metric)
    return out


@dataclass(frozen=True)
class NaiveBayesModel:
    """Fitted Naive Bayes parameters for two classes (0=clean, 1=faulty)."""

    mode: str  # "raw-gaussian" | "binarized-bernoulli"
    log_prior: np.ndarray  # shape (2,)
    means: np.ndarray | None = None  # (2, f) gaussian only
    variances: np.ndarray | None = None  # (2, f) gaussian only
    rates: np.ndarray | None = None  # (2, f) bernoulli only

    def __post_init__(self) -> None:
        if self.mode not in ("raw-gaussian", "binarized-bernoulli"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "raw-gaussian":
            if self.means is None or self.variances is None:
                raise ValueError("gaussian mode needs means and variances")
            if np.any(self.variances < VAR_FLOOR):
                raise ValueError("variances below floor")
        else:
            if self.rates is None:
                raise ValueError("bernoulli mode needs rates")
            if np.any(self.rates <= 0.0) or np.any(self.rates >= 1.0):
                raise ValueError("bernoulli rates must lie strictly inside (0,1)")


def nb_fit(features: np.ndarray, labels: np.ndarray, mode: str) -> NaiveBayesModel:
    """Fit Naive Bayes; ``mode`` picks the likelihood family.

    Gaussian likelihoods use maximum-likelihood variances with a floor;
    Bernoulli rates are Laplace smoothed (+1 / +2) so they stay inside
    (0,1).
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    y = (y != 0).astype(np.int64) if y.dtype != bool else y.astype(np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("features and labels do not line up")
    n1 = int(y.sum())
    n0 = y.shape[0] - n1
    if n0 == 0 or n1 == 0:
        raise DegenerateOutcomeError("training labels contain a single class")
    log_prior = np.log(np.array([n0, n1], dtype=np.float64) / y.shape[0])
    if mode == "raw-gaussian":
        means = np.stack([X[y == 0].mean(axis=0), X[y == 1].mean(axis=0)])
        variances = np.maximum(
            np.stack([X[y == 0].var(axis=0), X[y == 1].var(axis=0)]), VAR_FLOOR
        )
        return NaiveBayesModel(
            mode=mode, log_prior=log_prior, means=means, variances=variances
        )
    if mode == "binarized-bernoulli":
        ones = np.stack([X[y == 0].sum(axis=0), X[y == 1].sum(axis=0)])
        rates = (ones + 1.0) / (np.array([[n0], [n1]], dtype=np.float64) + 2.0)
        return NaiveBayesModel(mode=mode, log_prior=log_prior, rates=rates)
    raise ConfigError(f"unknown naive Bayes mode {mode!r}")


def _joint_log_likelihood(model: NaiveBayesModel, rows: np.ndarray) -> np.ndarray:
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    out = np.empty((rows.shape[0], 2), dtype=np.float64)
    for c in (0, 1):
        if model.mode == "raw-gaussian":
            mean = model.means[c]
            var = model.variances[c]
            out[:, c] = model.log_prior[c] - 0.5 * np.sum(
                np.log(2.0 * np.pi * var) + (rows - mean) ** 2 / var, axis=1
            )
        else:
            rate = model.rates[c]
            out[:, c] = model.log_prior[c] + np.sum(
                rows * np.log(rate) + (1.0 - rows) * np.log1p(-rate), axis=1
            )
    return out


def nb_posterior(model: NaiveBayesModel, row: np.ndarray) -> tuple[float, float]:
    """Normalized class posterior (clean, faulty) for one feature row."""
    jll = _joint_log_likelihood(model, row)[0]
    m = float(np.max(jll))
    w = np.exp(jll - m)
    w /= w.sum()
    return float(w[0]), float(w[1])


def nb_predict(model: NaiveBayesModel, row: np.ndarray) -> bool:
    """Predict faulty for one row; posterior ties go to not-faulty."""
    jll = _joint_log_likelihood(model, row)[0]
    return bool(jll[1] > jll[0])


def loocv_nb(
    d: SystemDataset,
    variant: str | Mapping[MetricId, int] = "raw",
    metrics: Sequence[MetricId] | None = None,
) -> float:
    """Leave-one-out g-mean of Naive Bayes within one dataset.

    ``variant`` is "raw" (Gaussian on raw values) or a metric-to-
    threshold mapping (Bernoulli on binarized values).  Folds whose
    training split collapses to one class are skipped with a warning.
    """
    n = len(d.classes)
    if n < MIN_EVAL_SIZE:
        raise InsufficientDataError(
            f"{d.label}: cross-validation needs n >= {MIN_EVAL_SIZE}, got {n}"
        )
    truth = np.array([rec.faulty for rec in d.classes], dtype=bool)
    if truth.all() or not truth.any():
        raise DegenerateOutcomeError(f"{d.label}: only one class present")
    y = truth.astype(np.uint8)
    if variant == "raw":
        if metrics is None:
            metrics = sorted(d.classes[0].metric_values)
        X = raw_features(d, metrics)
        preds = _kernels.nb_loocv_gaussian(X, y, VAR_FLOOR)
    elif isinstance(variant, Mapping):
        X = binarize_features(d, variant, metrics)
        preds = _kernels.nb_loocv_bernoulli(X, y, 1.0, 2.0)
    else:
        raise ConfigError(f"unknown evaluation variant {variant!r}")

    scored = preds != _kernels.PRED_SKIP
    skipped = int(np.sum(~scored))
    if skipped:
        warnings.warn(
            f"{d.label}: skipped {skipped} fold(s) whose training half "
            "lost a class",
            stacklevel=2,
        )
    cm = confusion_from_predictions(truth[scored], preds[scored] == 1)
    return g_mean(cm)


@dataclass(frozen=True)
class RankTestResult:
    """Friedman or Skillings-Mack outcome plus the Nemenyi layer."""

    statistic: float
    df: int
    p_value: float
    avg_ranks: dict[str, float]
    nemenyi_cd: float
    pairwise_significant: dict[tuple[str, str], bool]
    method: str
    n_blocks: int
    dropped_blocks: int = 0


def friedman_test(
    table: np.ndarray | Sequence[Sequence[float]],
    model_names: Sequence[str] | None = None,
    allow_missing: bool = False,
    alpha_level: float = 0.05,
) -> RankTestResult:
    """Rank test across blocks (datasets) and columns (models).

    Complete tables get the Friedman chi-square on average ranks.  With
    ``allow_missing`` and NaN cells, the Skillings-Mack statistic is
    used instead; it reduces exactly to Friedman when nothing is
    missing.  Blocks with fewer than two observed cells carry no rank
    information and are dropped.  Rank 1 is the best (highest) score.
    """
    scores = np.asarray(table, dtype=np.float64)
    if scores.ndim != 2:
        raise ValueError("score table must be blocks x models")
    n_blocks_in, k = scores.shape
    if k < 3:
        raise UnsupportedDesignError(f"rank test needs k >= 3 models, got {k}")
    if model_names is None:
        model_names = [f"model_{j + 1}" for j in range(k)]
    if len(model_names) != k:
        raise ValueError("model_names length does not match the table")

    observed = ~np.isnan(scores)
    if not allow_missing and not observed.all():
        raise UnsupportedDesignError(
            "table has missing cells; pass allow_missing=True for the "
            "Skillings-Mack path"
        )
    usable = observed.sum(axis=1) >= 2
    dropped = int(np.sum(~usable))
    scores = scores[usable]
    observed = observed[usable]
    n = scores.shape[0]
    if n < 2:
        raise InsufficientDataError(f"only {n} usable blocks")
    if n < 5:
        warnings.warn(
            f"only {n} usable blocks; the chi-square approximation is rough",
            stacklevel=2,
        )

    complete = observed.all()
    # rank within each block, best (highest) score first
    ranks = np.full_like(scores, np.nan)
    for i in range(n):
        obs = observed[i]
        ranks[i, obs] = average_ranks(-scores[i, obs])

    if complete:
        rank_sums = ranks.sum(axis=0)
        stat = 12.0 / (n * k * (k + 1)) * float(np.sum(rank_sums**2)) - 3.0 * n * (
            k + 1
        )
        stat = max(stat, 0.0)
        method = "friedman"
    else:
        stat = _skillings_mack(ranks, observed, k)
        method = "skillings-mack"

    df = k - 1
    p_value = float(_scipy_stats.chi2.sf(stat, df))
    with np.errstate(invalid="ignore"):
        avg = np.nanmean(ranks, axis=0)
    avg_ranks = {model_names[j]: float(avg[j]) for j in range(k)}
    cd = nemenyi_cd(k, n, alpha_level)
    pairwise: dict[tuple[str, str], bool] = {}
    for a in range(k):
        for b in range(a + 1, k):
            gap = abs(avg[a] - avg[b])
            pairwise[(model_names[a], model_names[b])] = bool(gap >= cd)
    return RankTestResult(
        statistic=float(stat),
        df=df,
        p_value=p_value,
        avg_ranks=avg_ranks,
        nemenyi_cd=cd,
        pairwise_significant=pairwise,
        method=method,
        n_blocks=n,
        dropped_blocks=dropped,
    )


def _skillings_mack(ranks: np.ndarray, observed: np.ndarray, k: int) -> float:
    """Weighted-rank statistic tolerating missing cells.

    Per block i with k_i observed cells, each observed rank contributes
    sqrt(12/(k_i+1)) * (r - (k_i+1)/2) to its model's adjusted sum A_j;
    the statistic is A' Sigma^+ A where Sigma sums the per-block rank
    covariances k_i*I - J over observed cells.
    """
    n = ranks.shape[0]
    A = np.zeros(k)
    cov = np.zeros((k, k))
    for i in range(n):
        obs = np.where(observed[i])[0]
        k_i = obs.shape[0]
        w = math.sqrt(12.0 / (k_i + 1))
        centered = ranks[i, obs] - (k_i + 1) / 2.0
        A[obs] += w * centered
        block = np.full((k_i, k_i), -1.0)
        np.fill_diagonal(block, k_i - 1.0)
        cov[np.ix_(obs, obs)] += block
    stat = float(A @ np.linalg.pinv(cov) @ A)
    return max(stat, 0.0)


def nemenyi_cd(k: int, n_blocks: int, alpha_level: float = 0.05) -> float:
    """Critical average-rank difference for pairwise model comparisons."""
    if alpha_level != 0.05:
        raise ConfigError("only the alpha=0.05 q table is shipped")
    q = _NEMENYI_Q_05.get(k)
    if q is None:
        raise UnsupportedDesignError(f"no q constant for k={k}; table covers 2..10")
    if n_blocks < 1:
        raise InsufficientDataError("need at least one block")
    return q * math.sqrt(k * (k + 1) / (6.0 * n_blocks))


@dataclass(frozen=True)
class ComparisonReport:
    """Per-dataset scores of the three NB variants plus the rank test."""

    rows: list[dict]
    rank_test: RankTestResult
    model_names: tuple[str, ...] = NB_MODEL_NAMES


def compare_nb_models(
    corpus: Corpus,
    metrics: Sequence[MetricId],
    lr_thresholds: Mapping[tuple[str, str], Mapping[MetricId, int]],
    estimated_thresholds: Mapping[tuple[str, str], Mapping[MetricId, int]],
) -> ComparisonReport:
    """Three-way NB comparison across all datasets of the corpus.

    Variants: raw values, the dataset's own logistic thresholds, and
    the size-estimated thresholds.  A dataset without logistic
    thresholds gets a missing cell in that column (the rank test
    tolerates it); datasets that cannot be evaluated at all are
    recorded and excluded from the test.
    """
    rows = []
    table = []
    for ds in corpus.datasets:
        row: dict = {
            "system": ds.system_id,
            "version": ds.version_label,
            "size": len(ds.classes),
        }
        cells = []
        try:
            raw_score = loocv_nb(ds, "raw", metrics=metrics)
        except (InsufficientDataError, DegenerateOutcomeError, UndefinedMeasureError):
            raw_score = math.nan
        cells.append(raw_score)

        lr = lr_thresholds.get(ds.key, {})
        lr_usable = {m: lr[m] for m in metrics if m in lr}
        if lr_usable:
            try:
                cells.append(loocv_nb(ds, lr_usable))
            except (InsufficientDataError, DegenerateOutcomeError, UndefinedMeasureError):
                cells.append(math.nan)
        else:
            cells.append(math.nan)

        est = estimated_thresholds.get(ds.key, {})
        est_usable = {m: est[m] for m in metrics if m in est}
        if est_usable:
            try:
                cells.append(loocv_nb(ds, est_usable))
            except (InsufficientDataError, DegenerateOutcomeError, UndefinedMeasureError):
                cells.append(math.nan)
        else:
            cells.append(math.nan)

        for name, value in zip(NB_MODEL_NAMES, cells):
            row[name] = None if math.isnan(value) else value
        rows.append(row)
        table.append(cells)

    rank_test = friedman_test(
        np.array(table, dtype=np.float64),
        model_names=list(NB_MODEL_NAMES),
        allow_missing=True,
    )
    return ComparisonReport(rows=rows, rank_test=rank_test)
