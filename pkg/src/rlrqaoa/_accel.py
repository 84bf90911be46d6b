"""Numba switch.

Set ``RLRQAOA_NUMBA=0`` to force the pure-numpy kernels. The flag is read once
at import time.
"""
from __future__ import annotations

import os

_FLAG = os.environ.get("RLRQAOA_NUMBA", "1").strip().lower()

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _FLAG not in ("0", "false", "no", "off")


def njit(*args, **kwargs):
    """``numba.njit`` with on-disk caching; raises if numba is missing."""
    import numba

    kwargs.setdefault("cache", True)
    return numba.njit(*args, **kwargs)


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
