"""Optional numba acceleration.

Set ``CAUSALPERF_NUMBA=0`` to force the pure-numpy code paths. The flag is
read once at import time.
"""
import os

_requested = os.environ.get("CAUSALPERF_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")

try:
    from numba import njit as _numba_njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    HAVE_NUMBA = False
    _numba_njit = None

USE_NUMBA = _requested and HAVE_NUMBA


def njit(*args, **kw):
    """``numba.njit`` when acceleration is enabled, otherwise a passthrough."""
    if USE_NUMBA:
        return _numba_njit(*args, **kw)
    if len(args) == 1 and callable(args[0]) and not kw:
        return args[0]
    return lambda f: f
