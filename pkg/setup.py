"""Build the optional compiled min-plus kernel.

The extension is a plain speedup for the hot inner scans; the package
works without it (a numpy fallback is selected at import time).  A failed
compile therefore downgrades to a warning instead of aborting the install.
"""

import warnings

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    extensions = [
        Extension(
            "proxlab._minplus",
            sources=["src/proxlab/_minplus.pyx"],
            include_dirs=[np.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            # -ffp-contract=off keeps the C arithmetic bit-identical to the
            # numpy fallback (no FMA contraction).
            extra_compile_args=["-O2", "-ffp-contract=off"],
        )
    ]
    ext_modules = cythonize(
        extensions,
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "language_level": "3",
        },
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    warnings.warn(f"proxlab._minplus will not be compiled ({exc}); "
                  "falling back to the numpy kernels")

setup(ext_modules=ext_modules)
