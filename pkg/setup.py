import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("bibdr._pg_cython", ["src/bibdr/_pg_cython.pyx"])],
        language_level=3,
    )
except ImportError:
    # Cython unavailable: install pure-Python only; bibdr.pg falls back.
    ext_modules = []

setup(
    ext_modules=ext_modules,
    include_dirs=[numpy.get_include()],
)
