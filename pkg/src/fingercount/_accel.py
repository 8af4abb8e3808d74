"""Backend switch for the compiled kernels.

Set ``FINGERCOUNT_NO_NUMBA=1`` before import to force the pure-numpy path.
Numba is optional; without it the numpy path is used automatically.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_FLAG = os.environ.get("FINGERCOUNT_NO_NUMBA", "").strip().lower()
NUMBA_DISABLED = _FLAG in ("1", "true", "yes", "on")
HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not NUMBA_DISABLED


def njit(func):
    """``numba.njit(cache=True)`` when numba is importable, else identity."""
    if numba is None:
        return func
    return numba.njit(cache=True)(func)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
