"""Size-threshold pairs, their correlation, and the estimation models.

The chain: every (system, version) contributes a size-threshold pair
per metric (threshold absent where the logistic fit gave none); pairs
deduplicated to one per system feed a Spearman screen; metrics that
pass get an ordinary-least-squares line mapping size to threshold,
tested by leaving one system out at a time.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np
from scipy import stats as _scipy_stats

from .config import ThresholdConfig
from .dataset import Corpus, MetricId, defect_ratio, population_defect_ratio
from .errors import (
    InsufficientDataError,
    SingularDesignError,
    UndefinedCorrelationError,
)
from .logit import (
    CorrectionContext,
    ThresholdComputation,
    ThresholdResult,
    finalize_threshold,
    threshold_trace,
)
from .ranking import average_ranks

__all__ = [
    "SizeThresholdPair",
    "CorrelationResult",
    "EstimationModel",
    "compute_traces",
    "pairs_from_traces",
    "build_pairs",
    "dedup_latest",
    "spearman",
    "fit_ols",
    "estimate_threshold",
    "leave_one_system_out",
    "screen_metrics",
    "correlation_grid",
]

#: Fewest (size, threshold) pairs a correlation will accept.
MIN_CORRELATION_PAIRS = 4


@dataclass(frozen=True)
class SizeThresholdPair:
    """One system version's size and its threshold, if it got one."""

    system_id: str
    version_label: str
    version_order: int
    size: int
    threshold: int | None
    status: str
    varl_raw: float | None = None

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ValueError(f"size {self.size} must be positive")
        if (self.threshold is None) != (self.status != "ok"):
            raise ValueError("threshold presence must match status")

    @property
    def significant(self) -> bool:
        return self.threshold is not None


@dataclass(frozen=True)
class CorrelationResult:
    """Spearman rho with its p-value and the pair count behind them."""

    rho: float
    p_value: float
    n_pairs: int
    metric: MetricId | None = None
    method: str = "t-approx"

    def __post_init__(self) -> None:
        if abs(self.rho) > 1.0 + 1e-12:
            raise ValueError(f"rho {self.rho} outside [-1,1]")

    @property
    def df(self) -> int:
        return self.n_pairs - 2


@dataclass(frozen=True)
class EstimationModel:
    """Least-squares line estimating a threshold from system size."""

    slope: float
    intercept: float
    n_train: int
    metric: MetricId | None = None

    def __post_init__(self) -> None:
        if self.n_train < 3:
            raise ValueError(f"n_train {self.n_train} below 3")


def compute_traces(
    corpus: Corpus, metric: MetricId, cfg: ThresholdConfig
) -> list[ThresholdComputation]:
    """Threshold trace for every dataset; fit trouble becomes a status."""
    y_pop: float | None = None
    if cfg.apply_correction:
        y_pop = (
            cfg.population_ratio
            if cfg.population_ratio is not None
            else population_defect_ratio(corpus, pooled=cfg.pooled_population)
        )
    traces = []
    for ds in corpus.datasets:
        ctx = None
        if cfg.apply_correction:
            ratio = defect_ratio(ds)
            # single-class datasets never reach the correction: the fit
            # fails first and the trace records why
            if 0.0 < ratio < 1.0:
                ctx = CorrectionContext(y_pop=y_pop, y_bar=ratio)
        traces.append(
            threshold_trace(
                ds,
                metric,
                ctx,
                cfg.risk_increase,
                apply_correction=cfg.apply_correction and ctx is not None,
                sig_level=cfg.sig_level,
                test=cfg.significance_test,
            )
        )
    return traces


def pairs_from_traces(
    corpus: Corpus, traces: Iterable[ThresholdComputation]
) -> list[SizeThresholdPair]:
    orders = {ds.key: ds.version_order for ds in corpus.datasets}
    return [
        SizeThresholdPair(
            system_id=t.system_id,
            version_label=t.version_label,
            version_order=orders[(t.system_id, t.version_label)],
            size=t.size,
            threshold=t.result.threshold if t.result else None,
            status=t.status,
            varl_raw=t.varl_raw,
        )
        for t in traces
    ]


def build_pairs(
    corpus: Corpus, metric: MetricId, cfg: ThresholdConfig
) -> list[SizeThresholdPair]:
    """One pair per system version; fit trouble becomes an absent threshold."""
    return pairs_from_traces(corpus, compute_traces(corpus, metric, cfg))


def dedup_latest(pairs: Iterable[SizeThresholdPair]) -> list[SizeThresholdPair]:
    """At most one significant pair per system: its newest one."""
    newest: dict[str, SizeThresholdPair] = {}
    for pair in pairs:
        if not pair.significant:
            continue
        cur = newest.get(pair.system_id)
        if cur is None or pair.version_order > cur.version_order:
            newest[pair.system_id] = pair
    return [newest[s] for s in sorted(newest)]


def spearman(
    pairs: Sequence[tuple[float, float]],
    *,
    metric: MetricId | None = None,
    exact: bool = False,
) -> CorrelationResult:
    """Spearman rank correlation with average-rank ties.

    The p-value comes from the t approximation with n-2 degrees of
    freedom; ``exact=True`` switches to the full permutation
    distribution, which is only tractable for n <= 10.
    """
    n = len(pairs)
    if n < MIN_CORRELATION_PAIRS:
        raise InsufficientDataError(
            f"correlation needs at least {MIN_CORRELATION_PAIRS} pairs, got {n}"
        )
    xs = np.array([p[0] for p in pairs], dtype=np.float64)
    ys = np.array([p[1] for p in pairs], dtype=np.float64)
    if np.all(xs == xs[0]) or np.all(ys == ys[0]):
        raise UndefinedCorrelationError("a constant coordinate has no rank order")
    rx = average_ranks(xs)
    ry = average_ranks(ys)
    rho = _pearson(rx, ry)

    if exact:
        if n > 10:
            raise InsufficientDataError(
                f"exact permutation p-value is limited to n <= 10, got {n}"
            )
        p_value = _exact_spearman_p(rx, ry, rho)
        method = "exact-permutation"
    else:
        if abs(rho) >= 1.0:
            p_value = 0.0
        else:
            t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
            p_value = 2.0 * float(_scipy_stats.t.sf(abs(t), n - 2))
        method = "t-approx"
    return CorrelationResult(
        rho=rho, p_value=min(p_value, 1.0), n_pairs=n, metric=metric, method=method
    )


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    ac = a - a.mean()
    bc = b - b.mean()
    denom = math.sqrt(float(np.dot(ac, ac)) * float(np.dot(bc, bc)))
    if denom == 0.0:
        raise UndefinedCorrelationError("zero variance after ranking")
    return float(np.dot(ac, bc)) / denom


def _exact_spearman_p(rx: np.ndarray, ry: np.ndarray, rho_obs: float) -> float:
    """Two-sided permutation p-value over all orderings of one ranking."""
    n = rx.shape[0]
    total = math.factorial(n)
    hits = 0
    chunk = []
    threshold = abs(rho_obs) - 1e-12
    for perm in itertools.permutations(range(n)):
        chunk.append(perm)
        if len(chunk) == 65536:
            hits += _count_extreme(rx, ry, np.array(chunk), threshold)
            chunk = []
    if chunk:
        hits += _count_extreme(rx, ry, np.array(chunk), threshold)
    return hits / total


def _count_extreme(
    rx: np.ndarray, ry: np.ndarray, perms: np.ndarray, threshold: float
) -> int:
    permuted = ry[perms]
    ac = rx - rx.mean()
    bc = permuted - permuted.mean(axis=1, keepdims=True)
    denom = np.sqrt(np.dot(ac, ac) * np.sum(bc * bc, axis=1))
    rhos = bc @ ac / denom
    return int(np.sum(np.abs(rhos) >= threshold))


def fit_ols(
    pairs: Sequence[SizeThresholdPair], *, metric: MetricId | None = None
) -> EstimationModel:
    """Least-squares threshold = slope*size + intercept.

    Pairs without a threshold are ignored; at least three full pairs
    with non-identical sizes must remain.
    """
    pts = [(p.size, p.threshold) for p in pairs if p.threshold is not None]
    n = len(pts)
    if n < 3:
        raise InsufficientDataError(f"OLS needs at least 3 pairs, got {n}")
    x = np.array([p[0] for p in pts], dtype=np.float64)
    y = np.array([p[1] for p in pts], dtype=np.float64)
    xc = x - x.mean()
    sxx = float(np.dot(xc, xc))
    if sxx == 0.0:
        raise SingularDesignError("all sizes equal; the slope is unidentifiable")
    slope = float(np.dot(xc, y)) / sxx
    intercept = float(y.mean()) - slope * float(x.mean())
    return EstimationModel(slope=slope, intercept=intercept, n_train=n, metric=metric)


def estimate_threshold(model: EstimationModel, size: int) -> ThresholdResult:
    """Threshold the model predicts for a system of ``size`` classes."""
    raw = model.slope * size + model.intercept
    return finalize_threshold(raw, metric=model.metric)


def leave_one_system_out(
    corpus: Corpus, metric: MetricId, cfg: ThresholdConfig
) -> dict[tuple[str, str], ThresholdResult]:
    """Held-out threshold estimates, one per system version.

    Each round removes every version of one system, refits the line on
    the remaining significant pairs, and estimates thresholds for all
    of the held-out versions, so no estimate ever saw its own system.
    """
    pairs = build_pairs(corpus, metric, cfg)
    by_system: dict[str, list[SizeThresholdPair]] = {}
    for pair in pairs:
        by_system.setdefault(pair.system_id, []).append(pair)

    out: dict[tuple[str, str], ThresholdResult] = {}
    for test_system in corpus.systems():
        train = [p for p in pairs if p.system_id != test_system and p.significant]
        if len(train) < cfg.min_train_pairs:
            raise InsufficientDataError(
                f"round holding out {test_system}: only {len(train)} training "
                f"pairs, need {cfg.min_train_pairs}"
            )
        model = fit_ols(train, metric=metric)
        for pair in by_system[test_system]:
            out[(pair.system_id, pair.version_label)] = estimate_threshold(
                model, pair.size
            )
    return out


def screen_metrics(
    corpus: Corpus, metrics: Sequence[MetricId], cfg: ThresholdConfig
) -> list[MetricId]:
    """Metrics whose deduplicated size-threshold correlation holds up.

    Selection needs p < sig_level and rho > 0; metrics with too few
    significant pairs for a correlation simply do not pass.
    """
    selected = []
    for metric in metrics:
        try:
            result = correlate_metric(corpus, metric, cfg)
        except (InsufficientDataError, UndefinedCorrelationError):
            continue
        if result.p_value < cfg.sig_level and result.rho > 0.0:
            selected.append(metric)
            if result.n_pairs < 8:
                warnings.warn(
                    f"{metric}: correlation rests on only {result.n_pairs} "
                    "systems; the estimation model will be thin",
                    stacklevel=2,
                )
    return selected


def correlate_metric(
    corpus: Corpus, metric: MetricId, cfg: ThresholdConfig
) -> CorrelationResult:
    """Size-threshold Spearman correlation on deduplicated pairs."""
    deduped = dedup_latest(build_pairs(corpus, metric, cfg))
    return spearman(
        [(p.size, p.threshold) for p in deduped],
        metric=metric,
        exact=cfg.exact_spearman,
    )


def correlation_grid(
    corpus: Corpus,
    metrics: Sequence[MetricId],
    increases: Sequence[float],
    cfg: ThresholdConfig,
) -> list[dict]:
    """Correlation rows over metric x risk increase x correction on/off."""
    rows = []
    for metric in metrics:
        for inc in increases:
            for corrected in (True, False):
                variant = replace(cfg, risk_increase=inc, apply_correction=corrected)
                try:
                    res = correlate_metric(corpus, metric, variant)
                    rows.append(
                        {
                            "metric": str(metric),
                            "risk_increase": inc,
                            "corrected": corrected,
                            "rho": res.rho,
                            "p_value": res.p_value,
                            "n_pairs": res.n_pairs,
                            "df": res.df,
                            "status": "ok",
                        }
                    )
                except (InsufficientDataError, UndefinedCorrelationError) as exc:
                    rows.append(
                        {
                            "metric": str(metric),
                            "risk_increase": inc,
                            "corrected": corrected,
                            "rho": None,
                            "p_value": None,
                            "n_pairs": None,
                            "df": None,
                            "status": str(exc),
                        }
                    )
    return rows
