"""Build hook for the optional compiled kernels.

The extension is best-effort: if Cython or a compiler is missing the
package still installs and runs on the pure-Python fallback.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("ATTNCAP_NO_EXT", "") in ("", "0"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "attncap._kernels",
                    ["src/attncap/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
