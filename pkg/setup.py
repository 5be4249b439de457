"""Build script for the optional Cython kernel extension.

The package works without the extension (a pure-numpy fallback is selected
at import time); building it just makes the hot loops faster.  Build with:

    pip install -e . --no-build-isolation
or
    python setup.py build_ext --inplace
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "mmfnd._kernels._cy",
                ["src/mmfnd/_kernels/_cy.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
