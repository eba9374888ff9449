"""Numeric kernels with a compiled core and a NumPy fallback.

The Cython extension is used when it was built; setting
``METRIC_THRESHOLDS_PURE_PY=1`` forces the NumPy path.  Both expose the
same functions and status codes, and the test suite holds them to
identical results.
"""

import os

from ._py_impl import PRED_SKIP, STATUS_DIVERGED, STATUS_MAX_ITER, STATUS_OK

if os.environ.get("METRIC_THRESHOLDS_PURE_PY") == "1":
    from . import _py_impl as _impl
else:
    try:
        from . import _c_impl as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _py_impl as _impl

BACKEND = _impl.BACKEND_NAME

logistic_irls = _impl.logistic_irls
nb_loocv_gaussian = _impl.nb_loocv_gaussian
nb_loocv_bernoulli = _impl.nb_loocv_bernoulli

__all__ = [
    "BACKEND",
    "STATUS_OK",
    "STATUS_DIVERGED",
    "STATUS_MAX_ITER",
    "PRED_SKIP",
    "logistic_irls",
    "nb_loocv_gaussian",
    "nb_loocv_bernoulli",
]
