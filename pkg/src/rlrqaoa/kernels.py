"""Backend-selecting wrappers around the hot kernels.

All wrappers take a :class:`~rlrqaoa.graph.CompactArrays`. The backend is
numba unless ``RLRQAOA_NUMBA=0`` is set (see :mod:`rlrqaoa._accel`).
"""
from __future__ import annotations

import numpy as np

from . import _kernels_numpy
from ._accel import USE_NUMBA, backend_name
from .graph import CompactArrays

if USE_NUMBA:
    from . import _kernels_numba as _impl
else:
    _impl = _kernels_numpy

__all__ = ["backend_name", "edge_terms", "vertex_terms", "energy_coeffs",
           "edge_terms_dgamma", "brute_force", "get_backend"]


def get_backend(name: str | None = None):
    """Kernel module by name (``"numba"`` or ``"numpy"``); default is the active one."""
    if name is None:
        return _impl
    if name == "numba":
        from . import _kernels_numba
        return _kernels_numba
    if name == "numpy":
        return _kernels_numpy
    raise ValueError(f"unknown backend {name!r}")


def _args(A: CompactArrays):
    return A.W, A.h, A.eu, A.ev, A.ew, A.ptr, A.nbr, A.nbr_w


def edge_terms(gamma: float, A: CompactArrays):
    if A.eu.shape[0] == 0:
        return np.zeros(0), np.zeros(0)
    return _impl.edge_terms(float(gamma), *_args(A))


def vertex_terms(gamma: float, A: CompactArrays) -> np.ndarray:
    return _impl.vertex_terms(float(gamma), A.h, A.ptr, A.nbr_w)


def energy_coeffs(gammas, A: CompactArrays):
    gammas = np.ascontiguousarray(gammas, dtype=float)
    return _impl.energy_coeffs(gammas, *_args(A))


def edge_terms_dgamma(gamma: float, A: CompactArrays):
    if A.eu.shape[0] == 0:
        z = np.zeros(0)
        return z, z, z, z
    return _impl.edge_terms_dgamma(float(gamma), *_args(A))


def brute_force(A: CompactArrays, offset: float, symmetric: bool, tol: float):
    best, bits, count = _impl.brute_force(A.h, A.ptr, A.nbr, A.nbr_w, float(offset),
                                          bool(symmetric), float(tol))
    return float(best), int(bits), int(count)
