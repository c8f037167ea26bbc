"""Selecting between the compiled and the interpreted simulation kernel.

``antroute._kernel`` resolves to the compiled extension when it was built
and to the plain-Python source otherwise; both come from the same file and
behave identically.  This module can additionally load the interpreted
variant *alongside* a compiled one (for benchmarks and parity tests) and
temporarily swap it into the package.

Setting ``ANTROUTE_PURE=1`` in the environment forces the interpreted
kernel for the whole process.
"""

from __future__ import annotations

import contextlib
import importlib.util
from importlib import resources

from . import _kernel

_pure = None


def active_kernel():
    from . import ants

    return ants._kernel


def pure_kernel():
    """The interpreted kernel module (the active one if nothing was built)."""
    global _pure
    if not _kernel.KERNEL_COMPILED:
        return _kernel
    if _pure is None:
        source = resources.files("antroute").joinpath("_kernel.py")
        spec = importlib.util.spec_from_file_location("antroute._kernel_pure", str(source))
        module = importlib.util.module_from_spec(spec)
        spec.loader.exec_module(module)
        assert not module.KERNEL_COMPILED
        _pure = module
    return _pure


@contextlib.contextmanager
def use_kernel(module):
    """Temporarily route kernel calls (engine construction, profile math)
    through ``module``."""
    from . import ants, power

    saved = (ants._kernel, power._kernel)
    ants._kernel = module
    power._kernel = module
    try:
        yield module
    finally:
        ants._kernel, power._kernel = saved
