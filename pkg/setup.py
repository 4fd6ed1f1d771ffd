"""Build script for the optional compiled simulation core.

The package is fully functional without the extension: dynsched.engine falls
back to the pure-Python event loop when dynsched._simcore is missing.  Any
failure while building the extension is therefore demoted to a warning.
"""
import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, broken toolchain, ...
            warnings.warn(f"skipping compiled core, using pure-Python fallback: {exc}")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"skipping {ext.name}: {exc}")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    from pathlib import Path

    if not Path("src/dynsched/_simcore.pyx").exists():
        return []
    return cythonize(
        [
            Extension(
                "dynsched._simcore",
                ["src/dynsched/_simcore.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": 3},
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
