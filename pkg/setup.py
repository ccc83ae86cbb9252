"""Build script for the compiled run-length kernel.

The extension links against numpy's npyrandom static library so the hot
loop can pull standard normals straight from the bit generator without
crossing back into Python.  If the toolchain is unavailable the package
still works: cdx._kernel falls back to a vectorized numpy implementation
at import time.
"""

import os
from os.path import join

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover - build-time guard
    cythonize = None

ext = Extension(
    "cdx._kernel._native",
    ["src/cdx/_kernel/_native.pyx"],
    include_dirs=[np.get_include()],
    library_dirs=[join(np.get_include(), "..", "..", "random", "lib")],
    libraries=["npyrandom"],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    # -ffp-contract=off: the pure-python fallback must produce bit-identical
    # stopping times, so the compiler must not fuse a*b+c into fma.
    extra_compile_args=["-O3", "-ffp-contract=off"],
)

if cythonize is not None and not os.environ.get("CDX_SKIP_NATIVE"):
    extensions = cythonize([ext], language_level=3)
else:  # pragma: no cover
    extensions = []

setup(ext_modules=extensions)
