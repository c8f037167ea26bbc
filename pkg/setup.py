"""Build script: compiles the simulation kernel to a C extension when possible.

The kernel at src/antroute/_kernel.py is written in Cython "pure Python" mode:
the very same file runs unmodified under the plain interpreter, so a failed
(or skipped) compilation only costs speed, never correctness.  The package
selects whichever variant is importable at run time.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/antroute/_kernel.py"],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    import sys

    print(f"antroute: building without compiled kernel ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
