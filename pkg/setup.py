"""Build the optional compiled kernels; the package works without them."""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize
except ImportError:  # no build tooling: pure-Python install
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "dehnfill._kernels",
                ["src/dehnfill/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
