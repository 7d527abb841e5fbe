"""Optional build of the compiled quadrature kernels.

If Cython or a compiler is unavailable the package still installs and falls
back to the numpy kernels at import time.
"""
from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("dipolatt._kernels._ckernels",
                   ["src/dipolatt/_kernels/_ckernels.pyx"],
                   include_dirs=[np.get_include()],
                   extra_compile_args=["-O3"])],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    print(f"dipolatt: building without compiled kernels ({exc})")

setup(ext_modules=ext_modules)
