import numpy as np
from setuptools import setup, Extension
from Cython.Build import cythonize

ext = Extension(
    "owl._kernel",
    ["src/owl/_kernel.pyx"],
    include_dirs=[np.get_include()],
    extra_compile_args=["-O3"],
)

setup(ext_modules=cythonize(ext, language_level=3))
