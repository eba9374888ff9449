"""Univariate logistic risk models and the thresholds they imply.

The chain implemented here: fit P(faulty | x) = sigmoid(alpha + beta*x)
for one metric, optionally shift alpha to compensate for the gap
between the dataset defect ratio and the population ratio, anchor an
acceptable risk level at background risk plus a fixed increase, invert
the model at that risk, and round the resulting metric value into an
integer threshold with a floor of two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .dataset import MetricId, SystemDataset, defect_ratio, system_size
from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateOutcomeError,
    DomainError,
    InsufficientDataError,
    NonPositiveSlopeError,
    RiskOverflowError,
    SingularDesignError,
)

__all__ = [
    "LogisticFit",
    "CorrectionContext",
    "RiskParams",
    "RoundingStep",
    "ThresholdResult",
    "ThresholdComputation",
    "MIN_THRESHOLD",
    "MIN_FIT_SIZE",
    "fit_univariate_logistic",
    "risk_at",
    "background_risk",
    "correct_intercept",
    "acceptable_risk",
    "varl_threshold",
    "round_half_up",
    "finalize_threshold",
    "calc_system_thresholds",
    "threshold_trace",
    "dataset_correction_context",
]

#: Thresholds below two would flag nearly every class, so two is the floor.
MIN_THRESHOLD = 2

#: Fewest observations a univariate fit will accept.
MIN_FIT_SIZE = 10


def _sigmoid(t: float) -> float:
    # branch on sign so exp() never overflows
    if t >= 0.0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


def risk_at(fit_alpha: float, fit_beta: float, x: float) -> float:
    """Modeled defect probability at metric value ``x``, strictly in (0,1)."""
    p = _sigmoid(fit_alpha + fit_beta * x)
    if p <= 0.0:
        return math.nextafter(0.0, 1.0)
    if p >= 1.0:
        return math.nextafter(1.0, 0.0)
    return p


def background_risk(alpha: float) -> float:
    """Defect probability the model assigns at metric value zero."""
    return risk_at(alpha, 0.0, 0.0)


@dataclass(frozen=True)
class LogisticFit:
    """Maximum-likelihood fit of faultiness on one metric."""

    alpha: float
    beta: float
    se_alpha: float
    se_beta: float
    p_value_beta: float
    n: int
    converged: bool
    separation_detected: bool
    score_norm: float
    n_iter: int
    metric: MetricId | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_value_beta <= 1.0:
            raise ValueError(f"p_value_beta {self.p_value_beta} outside [0,1]")


@dataclass(frozen=True)
class CorrectionContext:
    """Defect ratios the intercept correction compares.

    ``y_pop`` is the population ratio, ``y_bar`` the ratio of the
    dataset the model was fitted on.  Both must lie strictly inside
    (0,1) or the log in the correction is undefined.
    """

    y_pop: float
    y_bar: float

    def __post_init__(self) -> None:
        if not 0.0 < self.y_pop < 1.0:
            raise DomainError(f"population defect ratio {self.y_pop} outside (0,1)")
        if not 0.0 < self.y_bar < 1.0:
            raise DomainError(f"dataset defect ratio {self.y_bar} outside (0,1)")


@dataclass(frozen=True)
class RiskParams:
    """Background risk and the acceptable level derived from it."""

    risk_increase: float
    p0: float
    p_arl: float

    def __post_init__(self) -> None:
        if not 0.0 < self.p_arl < 1.0:
            raise DomainError(f"p_arl {self.p_arl} outside (0,1)")


@dataclass(frozen=True)
class RoundingStep:
    """How a raw threshold became an integer."""

    raw: float
    rounded: int
    policy: str = "half-up"


@dataclass(frozen=True)
class ThresholdResult:
    """An integer threshold with its provenance flags."""

    varl_raw: float
    threshold: int
    corrected: bool
    clamped: bool
    rounding: RoundingStep
    metric: MetricId | None = None

    def __post_init__(self) -> None:
        if self.threshold != max(MIN_THRESHOLD, self.rounding.rounded):
            raise ValueError("threshold does not match its rounding record")
        if self.clamped != (self.rounding.rounded < MIN_THRESHOLD):
            raise ValueError("clamped flag inconsistent with rounding record")


def fit_univariate_logistic(
    xs: Sequence[float] | np.ndarray,
    ys: Sequence[bool] | np.ndarray,
    tol: float = 1e-8,
    max_iter: int = 100,
    *,
    metric: MetricId | None = None,
    test: str = "wald",
) -> LogisticFit:
    """Fit P(faulty | x) = sigmoid(alpha + beta*x) by Newton iteration.

    ``test`` selects the significance test for beta: "wald" (default)
    or "lrt" for a likelihood-ratio test against the intercept-only
    model.  Perfectly or quasi-separated data is flagged rather than
    raised; genuine non-convergence raises :class:`ConvergenceError`.
    """
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.shape[0] != y.shape[0]:
        raise ValueError("xs and ys must be equal-length vectors")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("ys must be boolean (faulty / not faulty)")
    n = x.shape[0]
    if n < MIN_FIT_SIZE:
        raise InsufficientDataError(f"logistic fit needs n >= {MIN_FIT_SIZE}, got {n}")
    n_pos = int(np.sum(y == 1.0))
    if n_pos == 0 or n_pos == n:
        raise DegenerateOutcomeError("all outcomes identical; nothing to fit")
    if np.all(x == x[0]):
        raise SingularDesignError("metric is constant; slope is unidentifiable")
    if test not in ("wald", "lrt"):
        raise ConfigError(f"unknown significance test {test!r}")

    # complete separation: the classes occupy disjoint metric ranges
    pos_min = float(np.min(x[y == 1.0]))
    pos_max = float(np.max(x[y == 1.0]))
    neg_min = float(np.min(x[y == 0.0]))
    neg_max = float(np.max(x[y == 0.0]))
    separated = pos_min > neg_max or pos_max < neg_min

    alpha, beta, se_alpha, se_beta, score_norm, loglik, n_iter, status = (
        _kernels.logistic_irls(x, y, tol, max_iter)
    )
    if status == _kernels.STATUS_DIVERGED:
        separated = True
    elif status == _kernels.STATUS_MAX_ITER and not separated:
        raise ConvergenceError(
            f"no convergence in {max_iter} iterations (score norm {score_norm:.3g})"
        )

    if separated or not math.isfinite(beta):
        p_value = 1.0  # the test is meaningless here; never significant
    elif test == "lrt":
        ybar = n_pos / n
        ll_null = n_pos * math.log(ybar) + (n - n_pos) * math.log(1.0 - ybar)
        deviance = max(2.0 * (loglik - ll_null), 0.0)
        p_value = math.erfc(math.sqrt(deviance / 2.0))
    else:
        if not math.isfinite(se_beta) or se_beta <= 0.0:
            p_value = 1.0
        else:
            z = beta / se_beta
            p_value = math.erfc(abs(z) / math.sqrt(2.0))

    return LogisticFit(
        alpha=alpha,
        beta=beta,
        se_alpha=se_alpha,
        se_beta=se_beta,
        p_value_beta=min(max(p_value, 0.0), 1.0),
        n=n,
        converged=status == _kernels.STATUS_OK,
        separation_detected=separated,
        score_norm=score_norm,
        n_iter=n_iter,
        metric=metric,
    )


def correct_intercept(alpha: float, ctx: CorrectionContext) -> float:
    """Shift alpha so the model reflects the population defect ratio.

    The shift ln((1-y)/y * ybar/(1-ybar)) is computed as the difference
    of the two log-odds, which makes the identity at y == ybar exact
    instead of merely close.
    """
    shift = math.log(ctx.y_bar / (1.0 - ctx.y_bar)) - math.log(
        ctx.y_pop / (1.0 - ctx.y_pop)
    )
    return alpha - shift


def acceptable_risk(p0: float, risk_increase: float) -> RiskParams:
    """Background risk plus the configured increase.

    The inversion in :func:`varl_threshold` is undefined at or above
    probability one, hence :class:`RiskOverflowError` there.
    """
    if not 0.0 < p0 < 1.0:
        raise DomainError(f"background risk {p0} outside (0,1)")
    if not 0.0 < risk_increase < 1.0:
        raise DomainError(f"risk increase {risk_increase} outside (0,1)")
    p_arl = p0 + risk_increase
    if p_arl >= 1.0:
        raise RiskOverflowError(
            f"acceptable risk {p_arl} >= 1 (p0={p0}, increase={risk_increase})"
        )
    return RiskParams(risk_increase=risk_increase, p0=p0, p_arl=p_arl)


def varl_threshold(alpha: float, beta: float, p_arl: float) -> float:
    """Metric value at which modeled risk reaches ``p_arl``.

    Requires beta > 0: with a non-increasing risk curve a "value at
    risk" inverts its meaning, so that case is refused.
    """
    if beta <= 0.0:
        raise NonPositiveSlopeError(f"slope {beta} <= 0 admits no threshold")
    if not 0.0 < p_arl < 1.0:
        raise DomainError(f"p_arl {p_arl} outside (0,1)")
    return (math.log(p_arl / (1.0 - p_arl)) - alpha) / beta


def round_half_up(x: float) -> int:
    """Nearest integer, halves away from the floor (2.5 -> 3).

    The rounding policy lives in this one function so changing it is a
    one-line affair.
    """
    return math.floor(x + 0.5)


def finalize_threshold(
    varl_raw: float,
    *,
    metric: MetricId | None = None,
    corrected: bool = False,
) -> ThresholdResult:
    """Round a raw threshold to an integer and clamp it to the floor."""
    if not math.isfinite(varl_raw):
        raise DomainError(f"raw threshold {varl_raw} is not finite")
    rounded = round_half_up(varl_raw)
    return ThresholdResult(
        varl_raw=varl_raw,
        threshold=max(MIN_THRESHOLD, rounded),
        corrected=corrected,
        clamped=rounded < MIN_THRESHOLD,
        rounding=RoundingStep(raw=varl_raw, rounded=rounded),
        metric=metric,
    )


@dataclass(frozen=True)
class ThresholdComputation:
    """Full trace of one (dataset, metric) threshold attempt.

    ``status`` is "ok" when a threshold came out, otherwise the reason
    it did not; reports print absent thresholds as "x".
    """

    system_id: str
    version_label: str
    metric: MetricId
    size: int
    status: str
    fit: LogisticFit | None = None
    alpha_used: float | None = None
    risk: RiskParams | None = None
    varl_raw: float | None = None
    result: ThresholdResult | None = None
    detail: str = ""

    @property
    def threshold_or_x(self) -> str:
        return str(self.result.threshold) if self.result else "x"


def _threshold_chain(
    d: SystemDataset,
    metric: MetricId,
    ctx: CorrectionContext | None,
    inc: float,
    apply_correction: bool,
    sig_level: float,
    test: str,
) -> ThresholdComputation:
    base = dict(
        system_id=d.system_id,
        version_label=d.version_label,
        metric=metric,
        size=system_size(d),
    )
    if apply_correction and ctx is None:
        raise ConfigError("intercept correction requested without a correction context")
    xs = np.array([rec.value(metric) for rec in d.classes], dtype=np.float64)
    ys = np.array([1.0 if rec.faulty else 0.0 for rec in d.classes])
    fit = fit_univariate_logistic(xs, ys, metric=metric, test=test)

    if fit.separation_detected:
        return ThresholdComputation(**base, status="separated", fit=fit)
    if fit.p_value_beta >= sig_level:
        return ThresholdComputation(**base, status="not-significant", fit=fit)
    if fit.beta <= 0.0:
        return ThresholdComputation(**base, status="non-positive-slope", fit=fit)

    alpha_used = correct_intercept(fit.alpha, ctx) if apply_correction else fit.alpha
    p0 = background_risk(alpha_used)
    try:
        risk = acceptable_risk(p0, inc)
    except RiskOverflowError as exc:
        return ThresholdComputation(
            **base, status="risk-overflow", fit=fit, alpha_used=alpha_used,
            detail=str(exc),
        )
    raw = varl_threshold(alpha_used, fit.beta, risk.p_arl)
    result = finalize_threshold(raw, metric=metric, corrected=apply_correction)
    return ThresholdComputation(
        **base, status="ok", fit=fit, alpha_used=alpha_used, risk=risk,
        varl_raw=raw, result=result,
    )


def calc_system_thresholds(
    d: SystemDataset,
    metric: MetricId,
    ctx: CorrectionContext | None,
    inc: float,
    apply_correction: bool = True,
    sig_level: float = 0.05,
    *,
    test: str = "wald",
) -> ThresholdResult | None:
    """Threshold for one metric in one dataset, or None.

    None means the fit was not significant at ``sig_level``, its slope
    was not positive, the data separated, or the acceptable risk left
    (0,1).  Fit errors propagate to the caller.
    """
    return _threshold_chain(d, metric, ctx, inc, apply_correction, sig_level, test).result


def threshold_trace(
    d: SystemDataset,
    metric: MetricId,
    ctx: CorrectionContext | None,
    inc: float,
    apply_correction: bool = True,
    sig_level: float = 0.05,
    *,
    test: str = "wald",
) -> ThresholdComputation:
    """Like :func:`calc_system_thresholds` but never raises on fit trouble.

    Fit errors become statuses so report tables can carry one row per
    (dataset, metric) no matter what happened.
    """
    try:
        return _threshold_chain(d, metric, ctx, inc, apply_correction, sig_level, test)
    except InsufficientDataError as exc:
        status, detail = "too-few-classes", str(exc)
    except DegenerateOutcomeError as exc:
        status, detail = "degenerate-outcome", str(exc)
    except SingularDesignError as exc:
        status, detail = "constant-metric", str(exc)
    except ConvergenceError as exc:
        status, detail = "no-convergence", str(exc)
    return ThresholdComputation(
        system_id=d.system_id,
        version_label=d.version_label,
        metric=metric,
        size=system_size(d),
        status=status,
        detail=detail,
    )


def dataset_correction_context(y_pop: float, d: SystemDataset) -> CorrectionContext:
    """Correction context pairing the population ratio with ``d``'s own."""
    return CorrectionContext(y_pop=y_pop, y_bar=defect_ratio(d))
