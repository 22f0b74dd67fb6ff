"""Build the compiled solver kernels.

The package works without the extension (a NumPy fallback is selected at
import time); building it makes the ADMM inner loop several times faster.
"""

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "fsdiag._kernels",
        sources=["src/fsdiag/_kernels.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
