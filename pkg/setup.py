from setuptools import Extension, setup

# The compiled convolution kernels are optional: without Cython (or a C
# compiler) the package installs pure-Python and afresnet.nn.backend falls
# back to the numpy kernels at import time.
try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "afresnet.nn._conv_cy",
                ["src/afresnet/nn/_conv_cy.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
