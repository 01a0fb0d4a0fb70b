import numpy as np
from setuptools import setup
from Cython.Build import cythonize

setup(
    ext_modules=cythonize("src/kalzak/_backends/_core.pyx", language_level=3),
    include_dirs=[np.get_include()],
)
