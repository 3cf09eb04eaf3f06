"""Build script: compiles the optional fast-path extension.

The package works without the extension (a pure-Python twin of the
kernels is selected at import time), so a failed compile only costs
speed. Build with ``pip install -e . --no-build-isolation``.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("sleepspike._fastcore", ["src/sleepspike/_fastcore.pyx"])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
