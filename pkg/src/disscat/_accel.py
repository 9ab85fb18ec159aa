"""Kernel backend selection.

Every hot loop in the package has two same-signature builds: a numba @njit
one and a plain numpy one. Which build runs is decided here, once at import,
from the DISSCAT_DISABLE_NUMBA environment variable, and can be changed at
runtime with set_backend (the tests and the benchmark use that to compare
lanes inside one process).
"""

from __future__ import annotations

import os

DISABLE_ENV = "DISSCAT_DISABLE_NUMBA"

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False


def _env_disabled() -> bool:
    return os.environ.get(DISABLE_ENV, "").strip().lower() in ("1", "true", "yes")


_backend = "numba" if (HAS_NUMBA and not _env_disabled()) else "numpy"


def get_backend() -> str:
    """Name of the active kernel backend, 'numba' or 'numpy'."""
    return _backend


def set_backend(name: str) -> None:
    """Switch the kernel backend at runtime.

    Raises ValueError for unknown names and RuntimeError when numba is
    requested but not importable.
    """
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}, expected 'numba' or 'numpy'")
    if name == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    _backend = name


def jit(func):
    """Compile func with numba when available, else return it unchanged.

    Used for single-source kernels whose body is already numba compatible.
    The compiled build is only reached when the active backend is 'numba'.
    """
    if HAS_NUMBA:
        return numba.njit(cache=True)(func)
    return func
