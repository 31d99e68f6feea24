"""Build script: compiles the optional PAVA extension when Cython is available.

The package works without the extension; ssmean.kernels falls back to the
pure-Python implementation at import time.
"""
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "ssmean._pava",
                ["src/ssmean/_pava.pyx"],
                optional=True,
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
