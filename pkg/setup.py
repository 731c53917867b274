import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    extensions = [
        Extension(
            "fracduct._kernels._stencil",
            ["src/fracduct/_kernels/_stencil.pyx"],
            include_dirs=[np.get_include()],
            extra_compile_args=["-O3"],
        )
    ]
    ext_modules = cythonize(extensions, compiler_directives={"language_level": "3"})
else:
    # pure-Python fallback still works; the compiled core is an optimization
    ext_modules = []

setup(ext_modules=ext_modules)
