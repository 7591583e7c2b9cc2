"""Backend switch for the hot kernels.

``FRACSPDE_BACKEND=numpy`` (or ``FRACSPDE_DISABLE_NUMBA=1``) disables numba;
the kernels then run as plain Python/NumPy. The flag is read once at import.
"""

from __future__ import annotations

import os

_requested = os.environ.get("FRACSPDE_BACKEND", "numba").strip().lower()
if os.environ.get("FRACSPDE_DISABLE_NUMBA", "").strip() not in ("", "0"):
    _requested = "numpy"

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a hard dependency here
    _numba = None

USE_NUMBA = _requested == "numba" and _numba is not None
BACKEND = "numba" if USE_NUMBA else "numpy"


def njit(func):
    """``numba.njit(cache=True)`` when enabled, identity otherwise.

    The compiled dispatcher keeps the original function on ``.py_func``;
    :func:`python_impl` returns it either way.
    """
    if USE_NUMBA:
        return _numba.njit(cache=True)(func)
    return func


def python_impl(func):
    return getattr(func, "py_func", func)
