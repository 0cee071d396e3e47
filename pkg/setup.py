import numpy as np
from setuptools import Extension, setup

# The compiled kernels are optional: the package falls back to the pure-NumPy
# implementation when the extension is unavailable (see cgni._backend).
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "cgni._backend._kernels_cy",
                ["src/cgni/_backend/_kernels_cy.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3", "-fopenmp"],
                extra_link_args=["-fopenmp"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": 3, "embedsignature": True},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
