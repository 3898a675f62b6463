"""Build the optional Cython kernels.

Set SLICEMUX_NO_EXT=1 to skip compilation; the package then runs on the
pure-Python kernels.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("SLICEMUX_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "slicemux._ext",
                    ["src/slicemux/_ext.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
