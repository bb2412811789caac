"""Numba switch for the hot kernels.

``ABELFEM_NUMBA=0`` forces the pure-numpy code paths even when numba is
importable. Both paths must produce the same numbers to rounding.
"""
import os

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and os.environ.get("ABELFEM_NUMBA", "1").strip().lower() not in (
    "0",
    "false",
    "no",
    "off",
)


def njit(*args, **kwargs):
    """``numba.njit`` when numba is usable, otherwise the identity decorator."""
    if not HAS_NUMBA:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)
    return numba.njit(*args, **kwargs)


def default_threads():
    raw = os.environ.get("ABELFEM_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"ABELFEM_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ValueError("ABELFEM_THREADS must be >= 1")
    return n
