"""Build hook for the compiled scatter core.

The package works without the extension (a NumPy fallback is selected at
import time), so a failed compile only costs speed. We therefore swallow
build errors instead of failing the whole install.
"""

import os

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    if not os.path.exists("src/refocus/renderer/_scatter.pyx"):
        raise ImportError("extension source not present")
    extensions = cythonize(
        [
            Extension(
                "refocus.renderer._scatter",
                ["src/refocus/renderer/_scatter.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
