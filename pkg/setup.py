"""Build script: compiles the mode-wise propagation kernels when Cython is available.

The package is fully functional without the extension (a NumPy fallback is
selected at import time); building it just makes the hot loops faster.
"""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "toruslab._kernels._core",
                ["src/toruslab/_kernels/_core.pyx"],
                include_dirs=[np.get_include()],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
