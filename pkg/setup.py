"""Build script for the optional compiled kernels.

The package is fully functional without the extension: volerr.kernels
falls back to a pure-numpy implementation at import time if the
compiled module is missing.  Any failure here is therefore non-fatal.
"""

import sys

from setuptools import setup


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError as exc:
        print(f"volerr: skipping compiled kernels ({exc})", file=sys.stderr)
        return []

    ext = Extension(
        "volerr._kernels",
        sources=["src/volerr/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions())
