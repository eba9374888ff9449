"""Backend selection and compiled/NumPy kernel parity.

Every test that needs the compiled extension skips cleanly where only
the NumPy backend is available, so the suite passes on both kinds of
install.
"""

import math
import os
import subprocess
import sys

import numpy as np
import pytest

from metric_thresholds import _kernels
from metric_thresholds._kernels import _py_impl

try:
    from metric_thresholds._kernels import _c_impl
except ImportError:
    _c_impl = None

needs_extension = pytest.mark.skipif(
    _c_impl is None, reason="compiled extension not built"
)


def planted_draw(rng, n=400, alpha=-1.5, beta=0.08):
    x = np.floor(rng.lognormal(2.2, 0.9, n))
    mu = 1 / (1 + np.exp(-(alpha + beta * x)))
    y = (rng.random(n) < mu).astype(np.float64)
    if y.sum() in (0, n):  # keep both classes present
        y[0] = 1.0 - y[0]
    return x, y


# --- selection ----------------------------------------------------------------

def test_backend_is_one_of_the_two_names():
    assert _kernels.BACKEND in ("python", "cython")


def test_env_var_forces_numpy_backend_in_subprocess():
    env = dict(os.environ, METRIC_THRESHOLDS_PURE_PY="1")
    out = subprocess.run(
        [sys.executable, "-c",
         "from metric_thresholds import _kernels; print(_kernels.BACKEND)"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == "python"


def test_default_backend_matches_extension_availability():
    env = {k: v for k, v in os.environ.items() if k != "METRIC_THRESHOLDS_PURE_PY"}
    out = subprocess.run(
        [sys.executable, "-c",
         "from metric_thresholds import _kernels; print(_kernels.BACKEND)"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    expected = "python" if _c_impl is None else "cython"
    assert out.stdout.strip() == expected


def test_status_codes_are_shared_constants():
    assert _kernels.STATUS_OK == 0
    assert _kernels.STATUS_DIVERGED == 1
    assert _kernels.STATUS_MAX_ITER == 2
    assert _kernels.PRED_SKIP == 2
    if _c_impl is not None:
        assert _c_impl.BACKEND_NAME == "cython"
        assert _py_impl.BACKEND_NAME == "python"


# --- irls kernel -----------------------------------------------------------------

def test_irls_recovers_planted_coefficients():
    rng = np.random.default_rng(0)
    x, y = planted_draw(rng, n=20000)
    alpha, beta, se_a, se_b, score_norm, loglik, n_iter, status = (
        _kernels.logistic_irls(x, y)
    )
    assert status == _kernels.STATUS_OK
    assert score_norm < 1e-8
    assert alpha == pytest.approx(-1.5, abs=0.15)
    assert beta == pytest.approx(0.08, abs=0.02)
    assert se_a > 0 and se_b > 0
    assert loglik < 0 and math.isfinite(loglik)


def test_irls_no_association_converges_immediately():
    # the start point is the intercept-only maximum; with a balanced
    # binary predictor the beta score is already zero there
    x = np.r_[np.zeros(20), np.ones(20)]
    y = np.r_[np.zeros(10), np.ones(10), np.zeros(10), np.ones(10)]
    alpha, beta, *_rest, n_iter, status = _kernels.logistic_irls(x, y)
    assert status == _kernels.STATUS_OK
    assert n_iter == 1
    assert beta == 0.0
    assert alpha == pytest.approx(0.0, abs=1e-15)


def test_irls_separated_data_never_looks_healthy():
    # complete separation has no finite optimum; the kernel either
    # trips the beta cap or stalls on a saturated boundary solution
    # whose information is near zero.  Refusing such data up front is
    # the fitting layer's job (it checks for disjoint class ranges).
    x = np.arange(20, dtype=np.float64)
    y = np.r_[np.zeros(10), np.ones(10)]
    _alpha, _beta, _se_a, se_b, _score, _ll, _iters, status = (
        _kernels.logistic_irls(x, y)
    )
    if status == _kernels.STATUS_OK:
        assert se_b > 100.0
    else:
        assert status in (_kernels.STATUS_DIVERGED, _kernels.STATUS_MAX_ITER)


def test_irls_huge_values_stay_finite():
    rng = np.random.default_rng(1)
    x = np.floor(rng.lognormal(6.0, 1.5, 500))  # values into the tens of thousands
    mu = 1 / (1 + np.exp(-(-4.0 + 0.01 * x)))
    y = (rng.random(500) < mu).astype(np.float64)
    y[0] = 1.0 - y[0] if y.sum() in (0, 500) else y[0]
    alpha, beta, se_a, se_b, score_norm, loglik, n_iter, status = (
        _kernels.logistic_irls(x, y)
    )
    for v in (alpha, beta, score_norm):
        assert math.isfinite(v)
    assert math.isfinite(loglik)


@needs_extension
def test_irls_backends_agree():
    rng = np.random.default_rng(7)
    for _ in range(50):
        x, y = planted_draw(rng, n=int(rng.integers(20, 300)))
        got_c = _c_impl.logistic_irls(x, y)
        got_py = _py_impl.logistic_irls(x, y)
        assert got_c[7] == got_py[7]  # status
        assert got_c[6] == got_py[6]  # iterations
        if got_c[7] == _kernels.STATUS_OK:
            for a, b in zip(got_c[:6], got_py[:6]):
                assert a == pytest.approx(b, rel=1e-10, abs=1e-10)


# --- loocv kernels -----------------------------------------------------------------

def test_gaussian_loocv_skips_singleton_class_folds():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(12, 2))
    y = np.zeros(12, dtype=np.uint8)
    y[4] = 1
    preds = _kernels.nb_loocv_gaussian(X, y, 1e-9)
    assert preds[4] == _kernels.PRED_SKIP
    assert np.all(preds[np.arange(12) != 4] != _kernels.PRED_SKIP)


def test_bernoulli_loocv_skips_singleton_class_folds():
    rng = np.random.default_rng(3)
    X = (rng.random((12, 2)) < 0.5).astype(np.float64)
    y = np.zeros(12, dtype=np.uint8)
    y[4] = 1
    preds = _kernels.nb_loocv_bernoulli(X, y, 1.0, 2.0)
    assert preds[4] == _kernels.PRED_SKIP
    assert np.all(preds[np.arange(12) != 4] != _kernels.PRED_SKIP)


def test_gaussian_loocv_constant_feature_hits_the_variance_floor():
    X = np.c_[np.ones(14), np.r_[np.zeros(7), np.ones(7)]]
    y = np.r_[np.zeros(7, dtype=np.uint8), np.ones(7, dtype=np.uint8)]
    preds = _kernels.nb_loocv_gaussian(X, y, 1e-9)
    # the second feature separates the classes perfectly; the constant
    # first feature must not poison the likelihoods with a zero variance
    assert np.array_equal(preds, y)


@needs_extension
def test_gaussian_loocv_backends_agree():
    rng = np.random.default_rng(11)
    for _ in range(30):
        n = int(rng.integers(10, 200))
        X = np.floor(rng.lognormal(2.0, 0.8, (n, 3)))
        y = (rng.random(n) < 0.4).astype(np.uint8)
        got_c = _c_impl.nb_loocv_gaussian(X, y, 1e-9)
        got_py = _py_impl.nb_loocv_gaussian(X, y, 1e-9)
        assert np.array_equal(np.asarray(got_c), got_py)


@needs_extension
def test_bernoulli_loocv_backends_agree():
    rng = np.random.default_rng(13)
    for _ in range(30):
        n = int(rng.integers(10, 200))
        X = (rng.random((n, 3)) < rng.random(3)).astype(np.float64)
        y = (rng.random(n) < 0.4).astype(np.uint8)
        got_c = _c_impl.nb_loocv_bernoulli(X, y, 1.0, 2.0)
        got_py = _py_impl.nb_loocv_bernoulli(X, y, 1.0, 2.0)
        assert np.array_equal(np.asarray(got_c), got_py)
