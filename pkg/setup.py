"""Build the compiled kernel extension."""

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        name="ppgpeaks._ckernels",
        sources=["src/ppgpeaks/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        # no fast-math / contraction: the compiled path must be bit-identical
        # to the pure-Python fallback
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
)
