"""Build the optional Cython kernels; the package falls back to pure Python without them."""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("THERMALINK_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "thermalink._kernels",
                    ["src/thermalink/_kernels.pyx"],
                    extra_compile_args=["-O3"],
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
