"""Build script: compiles the optional ray-trace kernel extension.

The package is fully functional without the extension (a NumPy fallback is
selected at import time), so a failed compile should not block installation.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "gaussdomain._kernels._quadray",
                ["src/gaussdomain/_kernels/_quadray.pyx"],
                include_dirs=[np.get_include()],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
