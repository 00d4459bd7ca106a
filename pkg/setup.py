"""Build the optional compiled kernels; the package works without them."""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("singtrace._kernels", ["src/singtrace/_kernels.pyx"], include_dirs=[numpy.get_include()])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
