# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels.

Function-for-function mirror of ``_py_impl``; that module is the
reference implementation and the parity tests hold the two to the same
answers.
"""

from libc.math cimport exp, fabs, isfinite, log, log1p, sqrt, M_PI

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "cython"

STATUS_OK = 0
STATUS_DIVERGED = 1
STATUS_MAX_ITER = 2
PRED_SKIP = 2


cdef inline double _sigmoid(double t) noexcept nogil:
    cdef double e
    if t >= 0.0:
        return 1.0 / (1.0 + exp(-t))
    e = exp(t)
    return e / (1.0 + e)


def logistic_irls(object x_in, object y_in, double tol=1e-8, int max_iter=100,
                  double beta_cap=50.0):
    """See ``_py_impl.logistic_irls``."""
    cdef double[::1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef double[::1] y = np.ascontiguousarray(y_in, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i
    cdef int it, n_iter = 0, status = STATUS_MAX_ITER
    cdef double ybar = 0.0
    cdef double alpha, beta = 0.0
    cdef double mu, w, eta, g0, g1, s0, s1, s2, det, score_norm
    cdef double se_alpha, se_beta, loglik

    for i in range(n):
        ybar += y[i]
    ybar /= n
    alpha = log(ybar / (1.0 - ybar))  # intercept-only maximum

    for it in range(1, max_iter + 1):
        n_iter = it
        g0 = 0.0
        g1 = 0.0
        s0 = 0.0
        s1 = 0.0
        s2 = 0.0
        for i in range(n):
            mu = _sigmoid(alpha + beta * x[i])
            g0 += y[i] - mu
            g1 += (y[i] - mu) * x[i]
            w = mu * (1.0 - mu)
            s0 += w
            s1 += w * x[i]
            s2 += w * x[i] * x[i]
        score_norm = max(fabs(g0), fabs(g1))
        if score_norm < tol:
            status = STATUS_OK
            break
        det = s0 * s2 - s1 * s1
        if not isfinite(det) or det <= 0.0:
            status = STATUS_DIVERGED
            break
        alpha += (s2 * g0 - s1 * g1) / det
        beta += (s0 * g1 - s1 * g0) / det
        if not isfinite(alpha) or not isfinite(beta) or fabs(beta) > beta_cap:
            status = STATUS_DIVERGED
            break

    g0 = 0.0
    g1 = 0.0
    s0 = 0.0
    s1 = 0.0
    s2 = 0.0
    loglik = 0.0
    for i in range(n):
        eta = alpha + beta * x[i]
        mu = _sigmoid(eta)
        g0 += y[i] - mu
        g1 += (y[i] - mu) * x[i]
        w = mu * (1.0 - mu)
        s0 += w
        s1 += w * x[i]
        s2 += w * x[i] * x[i]
        if eta > 0.0:
            loglik += y[i] * eta - eta - log1p(exp(-eta))
        else:
            loglik += y[i] * eta - log1p(exp(eta))
    score_norm = max(fabs(g0), fabs(g1))
    det = s0 * s2 - s1 * s1
    if det > 0.0 and isfinite(det):
        se_alpha = sqrt(s2 / det)
        se_beta = sqrt(s0 / det)
    else:
        se_alpha = float("inf")
        se_beta = float("inf")
    return alpha, beta, se_alpha, se_beta, score_norm, loglik, n_iter, status


def nb_loocv_gaussian(object X_in, object y_in, double var_floor=1e-9):
    """See ``_py_impl.nb_loocv_gaussian``."""
    cdef double[:, ::1] X = np.ascontiguousarray(X_in, dtype=np.float64)
    cdef cnp.uint8_t[::1] y = np.ascontiguousarray(y_in, dtype=np.uint8)
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t f = X.shape[1]
    cdef Py_ssize_t i, j
    cdef long counts[2]
    cdef int own, other
    cdef double m, mean, var, v, ll_own, ll_oth
    preds_arr = np.full(n, PRED_SKIP, dtype=np.uint8)
    cdef cnp.uint8_t[::1] preds = preds_arr
    sums_arr = np.zeros((2, f), dtype=np.float64)
    sqs_arr = np.zeros((2, f), dtype=np.float64)
    cdef double[:, ::1] sums = sums_arr
    cdef double[:, ::1] sqs = sqs_arr

    counts[0] = 0
    counts[1] = 0
    for i in range(n):
        counts[y[i]] += 1
        for j in range(f):
            v = X[i, j]
            sums[y[i], j] += v
            sqs[y[i], j] += v * v

    for i in range(n):
        own = y[i]
        other = 1 - own
        if counts[own] < 2 or counts[other] < 1:
            continue  # no training examples left for the held-out class
        m = counts[own] - 1.0
        ll_own = log(m / (n - 1.0))
        ll_oth = log(counts[other] / (n - 1.0))
        for j in range(f):
            v = X[i, j]
            mean = (sums[own, j] - v) / m
            var = (sqs[own, j] - v * v) / m - mean * mean
            if var < var_floor:
                var = var_floor
            ll_own += -0.5 * (log(2.0 * M_PI * var) + (v - mean) * (v - mean) / var)
            mean = sums[other, j] / counts[other]
            var = sqs[other, j] / counts[other] - mean * mean
            if var < var_floor:
                var = var_floor
            ll_oth += -0.5 * (log(2.0 * M_PI * var) + (v - mean) * (v - mean) / var)
        if own == 1:
            preds[i] = 1 if ll_own > ll_oth else 0
        else:
            preds[i] = 1 if ll_oth > ll_own else 0
    return preds_arr


def nb_loocv_bernoulli(object X_in, object y_in, double alpha_num=1.0,
                       double alpha_den=2.0):
    """See ``_py_impl.nb_loocv_bernoulli``."""
    cdef double[:, ::1] X = np.ascontiguousarray(X_in, dtype=np.float64)
    cdef cnp.uint8_t[::1] y = np.ascontiguousarray(y_in, dtype=np.uint8)
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t f = X.shape[1]
    cdef Py_ssize_t i, j
    cdef long counts[2]
    cdef int own, other
    cdef double m, p, v, ll_own, ll_oth
    preds_arr = np.full(n, PRED_SKIP, dtype=np.uint8)
    cdef cnp.uint8_t[::1] preds = preds_arr
    ones_arr = np.zeros((2, f), dtype=np.float64)
    cdef double[:, ::1] ones = ones_arr

    counts[0] = 0
    counts[1] = 0
    for i in range(n):
        counts[y[i]] += 1
        for j in range(f):
            ones[y[i], j] += X[i, j]

    for i in range(n):
        own = y[i]
        other = 1 - own
        if counts[own] < 2 or counts[other] < 1:
            continue
        m = counts[own] - 1.0
        ll_own = log(m / (n - 1.0))
        ll_oth = log(counts[other] / (n - 1.0))
        for j in range(f):
            v = X[i, j]
            p = (ones[own, j] - v + alpha_num) / (m + alpha_den)
            ll_own += v * log(p) + (1.0 - v) * log1p(-p)
            p = (ones[other, j] + alpha_num) / (counts[other] + alpha_den)
            ll_oth += v * log(p) + (1.0 - v) * log1p(-p)
        if own == 1:
            preds[i] = 1 if ll_own > ll_oth else 0
        else:
            preds[i] = 1 if ll_oth > ll_own else 0
    return preds_arr
