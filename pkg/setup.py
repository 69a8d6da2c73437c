"""Build script: compiles the ADMM hot-kernel extension when a toolchain is
available, otherwise installs pure-Python only (the package falls back to the
numpy kernel at import time)."""

import os
import warnings

from setuptools import setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the extension if possible; degrade to pure Python otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, headers, ...
            warnings.warn(f"skipping compiled kernel ({exc}); using pure-Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"failed to build {ext.name} ({exc}); using pure-Python fallback")


ext_modules = []
if os.environ.get("THRESHCSP_PURE") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "threshcsp._core",
                    ["src/threshcsp/_core.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level="3",
        )
    except Exception as exc:
        warnings.warn(f"Cython unavailable ({exc}); using pure-Python fallback")

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
