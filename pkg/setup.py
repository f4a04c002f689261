"""Build script for the optional compiled tree kernels.

The package works without the extension (a NumPy fallback is selected at
import time); the extension just makes surrogate training and prediction
several times faster.  ``-ffp-contract=off`` keeps the compiled kernels
bit-identical to the NumPy path by forbidding FMA contraction.
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None:
    ext = Extension(
        "mergebench.gbdt._kernels_cy",
        ["src/mergebench/gbdt/_kernels_cy.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O2", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext.optional = True
    extensions = cythonize([ext], language_level=3)

setup(ext_modules=extensions)
