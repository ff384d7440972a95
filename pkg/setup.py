"""Builds the compiled LSTM kernel.

The package works without the extension (a NumPy fallback is selected at
import time); build it for the fast path:

    pip install -e . --no-build-isolation
"""

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

ext_modules = cythonize(
    Extension(
        name="seqtab.kernels._lstm_cy",
        sources=["src/seqtab/kernels/_lstm_cy.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    ),
    compiler_directives={
        "language_level": "3",
        "boundscheck": False,
        "wraparound": False,
        "cdivision": True,
    },
)

setup(ext_modules=ext_modules)
