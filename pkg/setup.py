"""Build script for the optional compiled kernels.

The extension is marked optional: if Cython or a C compiler is missing,
the package installs and runs on the numpy fallback.
"""
import os

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover - build-time only
    pass
else:
    openmp = [] if os.environ.get("HARDYLAB_NO_OPENMP") else ["-fopenmp"]
    ext = Extension(
        "hardylab._ckernels",
        ["src/hardylab/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"] + openmp,
        extra_link_args=openmp,
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
    ext_modules = cythonize([ext], compiler_directives={"language_level": "3"})

setup(ext_modules=ext_modules)
