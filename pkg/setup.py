"""Build hook for the optional compiled kernels.

The package works without them; if Cython or a C compiler is missing the
extension is skipped and the numpy implementation is used at import time.
"""
import os
import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover - depends on toolchain
            print(f"warning: compiled kernels not built ({exc}); using numpy fallback",
                  file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover
            print(f"warning: failed to build {ext.name} ({exc})", file=sys.stderr)


def march_flags():
    """Target the build machine unless FSOIRS_MARCH overrides it ("" disables)."""
    march = os.environ.get("FSOIRS_MARCH", "native")
    return [f"-march={march}"] if march else []


def extensions():
    if os.environ.get("FSOIRS_NO_EXT"):
        return []
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        return []
    ext = Extension(
        "fsoirs._hfkernel",
        ["src/fsoirs/_hfkernel.pyx"],
        include_dirs=[numpy.get_include(), "src/fsoirs"],
        extra_compile_args=["-O3", "-fopenmp-simd", "-fno-math-errno", "-fno-trapping-math"] + march_flags(),
        depends=["src/fsoirs/hfcore.h"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": 3})


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
