"""Optional numba acceleration.

Hot kernels are written twice: a numba ``@njit`` loop and a vectorised numpy
path.  Setting ``LIPFILL_NO_NUMBA=1`` (or running without numba installed)
selects the numpy path everywhere.
"""
import os

try:
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("LIPFILL_NO_NUMBA", "0") not in ("1", "true", "yes")


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise a no-op decorator."""
    if HAVE_NUMBA:
        return _njit(*args, cache=True, **kwargs)

    def wrap(fn):
        return fn

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return wrap


def backend():
    return "numba" if USE_NUMBA else "numpy"
