from setuptools import Extension, setup


def get_extensions():
    """Compiled kernels; an empty list leaves the pure-Python fallback in charge."""
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("WARNING: Cython not available, installing the pure-Python kernels only.")
        return []
    extensions = [
        Extension(
            "pwsparse._kernels_c",
            sources=["src/pwsparse/_kernels_c.pyx"],
            extra_compile_args=["-O3"],
        )
    ]
    return cythonize(extensions, compiler_directives={"language_level": "3"})


setup(ext_modules=get_extensions())
