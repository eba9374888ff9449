"""Time the compiled kernels against the NumPy fallback.

Runs the IRLS fit and both leave-one-out NB kernels on synthetic data
of a few sizes, checks that the two backends agree on the result, and
prints per-call times plus the speedup.  Without the built extension
only the fallback is timed.

    python3 benchmarks/bench_kernels.py [--repeats N] [--sizes a,b,c]
"""

import argparse
import time

import numpy as np

from metric_thresholds._kernels import _py_impl

try:
    from metric_thresholds._kernels import _c_impl
except ImportError:
    _c_impl = None


def _sigmoid(t):
    return 1.0 / (1.0 + np.exp(-t))


def logistic_case(rng, n):
    x = rng.gamma(2.0, 5.0, size=n)
    y = (rng.uniform(size=n) < _sigmoid(-1.0 + 0.1 * x)).astype(np.float64)
    return (x, y, 1e-8, 100)


def gaussian_case(rng, n):
    X = rng.normal(size=(n, 4))
    y = (rng.uniform(size=n) < _sigmoid(X.sum(axis=1))).astype(np.uint8)
    X[y == 1] += 0.8
    return (X, y)


def bernoulli_case(rng, n):
    X = (rng.uniform(size=(n, 4)) < 0.4).astype(np.float64)
    y = (rng.uniform(size=n) < _sigmoid(X.sum(axis=1) - 1.0)).astype(np.uint8)
    return (X, y)


KERNELS = [
    ("logistic_irls", logistic_case),
    ("nb_loocv_gaussian", gaussian_case),
    ("nb_loocv_bernoulli", bernoulli_case),
]


def best_of(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def check_agreement(name, a, b):
    if name == "logistic_irls":
        # compare the fitted pair and the status code
        if a[-1] != b[-1] or abs(a[0] - b[0]) > 1e-8 or abs(a[1] - b[1]) > 1e-8:
            raise SystemExit(f"{name}: backends disagree ({a} vs {b})")
    elif not np.array_equal(a, b):
        raise SystemExit(f"{name}: backends disagree")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=20)
    ap.add_argument("--sizes", default="500,2000,10000",
                    help="comma-separated row counts")
    opts = ap.parse_args()
    sizes = [int(s) for s in opts.sizes.split(",")]

    if _c_impl is None:
        print("compiled extension not built; timing the NumPy fallback only")
    header = f"{'kernel':<20} {'n':>7} {'python':>12} {'cython':>12} {'speedup':>9}"
    print(header)
    print("-" * len(header))

    for name, make_case in KERNELS:
        for n in sizes:
            rng = np.random.default_rng(404)
            args = make_case(rng, n)
            py_fn = getattr(_py_impl, name)
            py_t = best_of(py_fn, args, opts.repeats)
            if _c_impl is None:
                print(f"{name:<20} {n:>7} {py_t * 1e3:>10.3f} ms {'-':>12} {'-':>9}")
                continue
            c_fn = getattr(_c_impl, name)
            check_agreement(name, py_fn(*args), c_fn(*args))
            c_t = best_of(c_fn, args, opts.repeats)
            print(
                f"{name:<20} {n:>7} {py_t * 1e3:>10.3f} ms "
                f"{c_t * 1e3:>9.3f} ms {py_t / c_t:>8.1f}x"
            )


if __name__ == "__main__":
    main()
