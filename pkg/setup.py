import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

# -ffp-contract=off keeps per-face arithmetic bit-identical to the numpy
# backend, so tie-breaking on exact distance equality agrees across backends.
ext_modules = []
if cythonize is not None and os.environ.get("DEXSYNTH_PURE") != "1":
    ext_modules = cythonize(
        [
            Extension(
                "dexsynth.kernels._core",
                ["src/dexsynth/kernels/_core.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
