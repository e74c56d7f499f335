import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "fracphase._kernels",
                ["src/fracphase/_kernels.pyx"],
                include_dirs=[np.get_include()],
            )
        ],
        language_level=3,
    )
except ImportError:
    # pure-Python fallback is selected at import when the extension is absent
    ext_modules = []

setup(ext_modules=ext_modules)
