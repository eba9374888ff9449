"""NumPy implementations of the numeric kernels.

These mirror the compiled extension module function for function; the
package selects one of the two at import time.  Everything here takes
plain float64 arrays and returns plain values, with no knowledge of the
dataset model.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"

# logistic_irls exit status
STATUS_OK = 0
STATUS_DIVERGED = 1
STATUS_MAX_ITER = 2

# leave-one-out prediction marker for folds that cannot be scored
PRED_SKIP = 2


def _sigmoid(t: np.ndarray) -> np.ndarray:
    # branch on sign so neither exp() can overflow
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def logistic_irls(
    x: np.ndarray,
    y: np.ndarray,
    tol: float = 1e-8,
    max_iter: int = 100,
    beta_cap: float = 50.0,
) -> tuple[float, float, float, float, float, float, int, int]:
    """Newton iteration for P(y=1|x) = 1 / (1 + exp(-(a + b*x))).

    Returns (alpha, beta, se_alpha, se_beta, score_norm, loglik,
    n_iter, status).  Convergence means the max-norm of the score
    dropped below ``tol``.  The iteration stops with STATUS_DIVERGED
    when |beta| escapes past ``beta_cap`` or the information matrix
    stops being positive definite, which is how separated data shows
    up here.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = x.shape[0]
    ybar = float(y.sum()) / n
    # start at the intercept-only maximum, where the alpha score is zero
    alpha = float(np.log(ybar / (1.0 - ybar)))
    beta = 0.0
    status = STATUS_MAX_ITER
    n_iter = 0
    for it in range(1, max_iter + 1):
        n_iter = it
        mu = _sigmoid(alpha + beta * x)
        g0 = float(np.sum(y - mu))
        g1 = float(np.dot(y - mu, x))
        score_norm = max(abs(g0), abs(g1))
        if score_norm < tol:
            status = STATUS_OK
            break
        w = mu * (1.0 - mu)
        s0 = float(np.sum(w))
        s1 = float(np.dot(w, x))
        s2 = float(np.dot(w, x * x))
        det = s0 * s2 - s1 * s1
        if not np.isfinite(det) or det <= 0.0:
            status = STATUS_DIVERGED
            break
        alpha += (s2 * g0 - s1 * g1) / det
        beta += (s0 * g1 - s1 * g0) / det
        if not np.isfinite(alpha) or not np.isfinite(beta) or abs(beta) > beta_cap:
            status = STATUS_DIVERGED
            break

    eta = alpha + beta * x
    mu = _sigmoid(eta)
    g0 = float(np.sum(y - mu))
    g1 = float(np.dot(y - mu, x))
    score_norm = max(abs(g0), abs(g1))
    w = mu * (1.0 - mu)
    s0 = float(np.sum(w))
    s1 = float(np.dot(w, x))
    s2 = float(np.dot(w, x * x))
    det = s0 * s2 - s1 * s1
    if det > 0.0 and np.isfinite(det):
        se_alpha = float(np.sqrt(s2 / det))
        se_beta = float(np.sqrt(s0 / det))
    else:
        se_alpha = float("inf")
        se_beta = float("inf")
    loglik = float(np.sum(y * eta - np.logaddexp(0.0, eta)))
    return alpha, beta, se_alpha, se_beta, score_norm, loglik, n_iter, status


def nb_loocv_gaussian(
    X: np.ndarray, y: np.ndarray, var_floor: float = 1e-9
) -> np.ndarray:
    """Leave-one-out Gaussian naive Bayes predictions.

    For each record the model is refitted on the other n-1 records by
    downdating per-class sums and sums of squares, then the held-out
    record is classified.  Returns uint8 predictions; PRED_SKIP marks
    folds whose training half lost a class entirely.  Ties go to 0.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.uint8)
    n = X.shape[0]
    preds = np.full(n, PRED_SKIP, dtype=np.uint8)
    counts = np.array([int(np.sum(y == 0)), int(np.sum(y == 1))], dtype=np.int64)
    sums = np.stack([X[y == 0].sum(axis=0), X[y == 1].sum(axis=0)])
    sqs = np.stack([(X[y == 0] ** 2).sum(axis=0), (X[y == 1] ** 2).sum(axis=0)])

    for own in (0, 1):
        idx = np.where(y == own)[0]
        if idx.size == 0 or counts[own] == 1:
            continue  # folds in a singleton class have no training examples left
        other = 1 - own
        if counts[other] == 0:
            continue
        m = counts[own] - 1
        held = X[idx]
        mean_own = (sums[own] - held) / m
        var_own = np.maximum((sqs[own] - held**2) / m - mean_own**2, var_floor)
        mean_oth = sums[other] / counts[other]
        var_oth = np.maximum(sqs[other] / counts[other] - mean_oth**2, var_floor)

        ll_own = -0.5 * np.sum(
            np.log(2.0 * np.pi * var_own) + (held - mean_own) ** 2 / var_own, axis=1
        ) + np.log(m / (n - 1))
        ll_oth = -0.5 * np.sum(
            np.log(2.0 * np.pi * var_oth) + (held - mean_oth) ** 2 / var_oth, axis=1
        ) + np.log(counts[other] / (n - 1))

        if own == 1:
            preds[idx] = (ll_own > ll_oth).astype(np.uint8)
        else:
            preds[idx] = (ll_oth > ll_own).astype(np.uint8)
    return preds


def nb_loocv_bernoulli(
    X: np.ndarray, y: np.ndarray, alpha_num: float = 1.0, alpha_den: float = 2.0
) -> np.ndarray:
    """Leave-one-out Bernoulli naive Bayes on a 0/1 feature matrix.

    Feature likelihoods are Laplace smoothed:
    p = (ones + alpha_num) / (count + alpha_den).  Same conventions as
    :func:`nb_loocv_gaussian` otherwise.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.uint8)
    n = X.shape[0]
    preds = np.full(n, PRED_SKIP, dtype=np.uint8)
    counts = np.array([int(np.sum(y == 0)), int(np.sum(y == 1))], dtype=np.int64)
    ones = np.stack([X[y == 0].sum(axis=0), X[y == 1].sum(axis=0)])

    for own in (0, 1):
        idx = np.where(y == own)[0]
        if idx.size == 0 or counts[own] == 1:
            continue
        other = 1 - own
        if counts[other] == 0:
            continue
        m = counts[own] - 1
        held = X[idx]
        p_own = (ones[own] - held + alpha_num) / (m + alpha_den)
        p_oth = (ones[other] + alpha_num) / (counts[other] + alpha_den)

        ll_own = np.sum(
            held * np.log(p_own) + (1.0 - held) * np.log1p(-p_own), axis=1
        ) + np.log(m / (n - 1))
        ll_oth = np.sum(
            held * np.log(p_oth) + (1.0 - held) * np.log1p(-p_oth), axis=1
        ) + np.log(counts[other] / (n - 1))

        if own == 1:
            preds[idx] = (ll_own > ll_oth).astype(np.uint8)
        else:
            preds[idx] = (ll_oth > ll_own).astype(np.uint8)
    return preds
