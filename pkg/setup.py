"""Build script: compiles the recurrent-step kernels unless EVOCAST_SKIP_EXT is set.

The package works without the extension (a numpy fallback is selected at
import time), so a failed build only costs speed.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("EVOCAST_SKIP_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "evocast.nn._kernels",
                    sources=["src/evocast/nn/_kernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={
                "language_level": 3,
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except ImportError:
        print("evocast: Cython/numpy unavailable, building without compiled kernels")

setup(ext_modules=ext_modules)
