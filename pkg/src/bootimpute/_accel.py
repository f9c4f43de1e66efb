"""Optional numba acceleration.

Kernels in :mod:`bootimpute.kernels` come in two flavours: an ``@njit``
loop version and a vectorised numpy version. The loop version is used
when numba imports cleanly and ``BIV_DISABLE_NUMBA`` is unset (or "0").
"""

import os

_FLAG = os.environ.get("BIV_DISABLE_NUMBA", "0").strip().lower()
DISABLED = _FLAG not in ("", "0", "false", "no")

try:
    import numba
except ImportError:  # pragma: no cover - depends on environment
    numba = None

USE_NUMBA = numba is not None and not DISABLED


def njit(*args, **kwargs):
    """``numba.njit`` when numba is installed, a passthrough otherwise."""
    if numba is not None:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f
