"""Build script.

The compiled term-arithmetic kernel is optional: if Cython is unavailable or
the extension fails to build, the package installs anyway and falls back to
the pure-Python kernel at import time (see algebroids.kernel).
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("ALGEBROIDS_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "algebroids._termops",
                    ["src/algebroids/_termops.pyx"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
