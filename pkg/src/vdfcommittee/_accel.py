"""Numba switch.

Set ``VDFCOMMITTEE_DISABLE_NUMBA=1`` (or run without numba installed) to use
the pure-numpy kernels. The flag is read once at import time.
"""

import os

_DISABLED = os.environ.get("VDFCOMMITTEE_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError("numba disabled by VDFCOMMITTEE_DISABLE_NUMBA")
    from numba import njit as _numba_njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised with the env flag in CI
    _numba_njit = None
    NUMBA_AVAILABLE = False


def njit(*args, **kwargs):
    """``numba.njit`` when enabled, otherwise an identity decorator."""
    if _numba_njit is not None:
        return _numba_njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrapper(f):
        return f

    return wrapper
