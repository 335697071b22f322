import os

import numpy as np
from setuptools import Extension, setup

# MMOPTO_NO_EXT=1 skips the compiled kernel; the pure-Python path is used instead.
ext_modules = []
if not os.environ.get("MMOPTO_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "mmopto.oracle._rk",
                    ["src/mmopto/oracle/_rk.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3", "-fcx-limited-range"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
