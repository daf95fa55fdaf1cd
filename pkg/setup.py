"""Build the optional compiled kernels.

The package imports and runs without them; ``modescope.kernels`` falls back
to a numpy implementation when ``modescope._core`` is missing.
"""
import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "modescope._core",
                ["src/modescope/_core.pyx"],
                include_dirs=[np.get_include()],
                # no -ffast-math: the kernels must round exactly like numpy
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
