import os

from setuptools import Extension, setup

# The compiled kernels are an optimization, not a requirement: when Cython
# (or a C compiler) is missing the package installs without them and the
# NumPy fallback is selected at import time.
ext_modules = []
if os.environ.get("METRIC_THRESHOLDS_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "metric_thresholds._kernels._c_impl",
                    ["src/metric_thresholds/_kernels/_c_impl.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": 3},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
