"""Builds the optional compiled kernels. The package works without them:
mirsim._kernels falls back to the numpy implementation when the extension
is absent (or when MIR_PURE_PY=1)."""

import sys

from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    extensions = cythonize(
        [
            Extension(
                "mirsim._kernels._native",
                ["src/mirsim/_kernels/_native.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )
except ImportError as exc:
    print(f"cython/numpy unavailable ({exc}); installing without compiled kernels",
          file=sys.stderr)
    extensions = []

setup(ext_modules=extensions)
