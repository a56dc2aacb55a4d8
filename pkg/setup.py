from setuptools import Extension, setup

# -ffp-contract=off keeps the compiled kernel bit-identical to the NumPy
# fallback (no FMA contraction of p*v + acc).
ext = Extension(
    "aoi_dpp._kernels._dp_cython",
    ["src/aoi_dpp/_kernels/_dp_cython.pyx"],
    extra_compile_args=["-O3", "-ffp-contract=off"],
)

try:
    from Cython.Build import cythonize

    ext_modules = cythonize([ext], compiler_directives={"language_level": "3"})
except ImportError:
    # No Cython: install pure-Python; the package falls back to the NumPy
    # kernel at import time.
    ext_modules = []

setup(ext_modules=ext_modules)
