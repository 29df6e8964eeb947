"""Kernel backend selection.

The hot numeric kernels exist twice: a numba ``@njit`` build and a pure-numpy
vectorized build. ``MMTOPO_NUMBA=0`` forces the numpy path, ``MMTOPO_NUMBA=1``
requires numba (import error propagates), anything else auto-detects.
The choice is fixed at import time so a process never mixes backends.
"""

import os

_flag = os.environ.get("MMTOPO_NUMBA", "auto").strip().lower()

if _flag in ("0", "no", "off", "false"):
    NUMBA_ENABLED = False
elif _flag in ("1", "yes", "on", "true"):
    import numba  # noqa: F401

    NUMBA_ENABLED = True
else:
    try:
        import numba  # noqa: F401

        NUMBA_ENABLED = True
    except ImportError:
        NUMBA_ENABLED = False


def backend_name():
    return "numba" if NUMBA_ENABLED else "numpy"
