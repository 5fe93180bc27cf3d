import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("PHONOSAL_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "phonosal.kernels._ckernels",
                    ["src/phonosal/kernels/_ckernels.pyx"],
                    extra_compile_args=["-O3"],
                    # the package falls back to the numpy kernels if this
                    # extension fails to build or import
                    optional=True,
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
