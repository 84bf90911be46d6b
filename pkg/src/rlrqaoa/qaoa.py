"""Depth-1 QAOA on Ising instances: closed-form expectations and angle search.

The public API takes unabsorbed angles ``(alpha, gamma)`` for the state
``exp(-i alpha sum_j X_j) exp(-i gamma H) |+...+>``; internally couplings and
fields are scaled by ``gamma`` before the closed-form products are taken.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import kernels
from .errors import InvalidEdge, InvalidVertex, SizeLimit, UnsupportedFields
from .graph import Edge, IsingInstance

STATEVECTOR_MAX_QUBITS = 14
DEFAULT_GRID = 2000


@dataclass(frozen=True)
class Angles:
    alpha: float
    gamma: float


@dataclass(frozen=True)
class PQRFit:
    """``energy(alpha) = p cos(4 alpha) + q sin(4 alpha) + r`` at fixed gamma."""

    p: float
    q: float
    r: float
    gamma: float

    def __call__(self, alpha):
        return self.p * np.cos(4 * alpha) + self.q * np.sin(4 * alpha) + self.r

    @property
    def max_energy(self) -> float:
        return self.r + math.hypot(self.p, self.q)


class CorrelationVector:
    """Two-point correlations ``<Z_u Z_v>`` keyed by the instance's edges."""

    __slots__ = ("edges", "values", "_index")

    def __init__(self, edges: Sequence[Edge], values: np.ndarray):
        self.edges = tuple(edges)
        self.values = np.asarray(values, dtype=float)
        if self.values.shape != (len(self.edges),):
            raise ValueError("one value per edge expected")
        self._index = None

    def __len__(self):
        return len(self.edges)

    def __getitem__(self, edge: Edge) -> float:
        if self._index is None:
            self._index = {e: i for i, e in enumerate(self.edges)}
        u, v = edge
        return float(self.values[self._index[(u, v) if u < v else (v, u)]])

    def items(self) -> Iterator[tuple[Edge, float]]:
        return zip(self.edges, self.values.tolist())

    def as_dict(self) -> dict[Edge, float]:
        return dict(self.items())

    def __repr__(self):
        return f"CorrelationVector({len(self)} edges)"


# -- single expectations, written directly from the closed form ------------------

def expectation_z(instance: IsingInstance, angles: Angles, u: int) -> float:
    if u not in instance.vertices:
        raise InvalidVertex(f"vertex {u} is not alive")
    a, g = angles.alpha, angles.gamma
    value = math.sin(2 * a) * math.sin(2 * g * instance.field_at(u))
    for j in instance.adjacency[u].values():
        value *= math.cos(2 * g * j)
    return value


def expectation_zz(instance: IsingInstance, angles: Angles, edge: Edge) -> float:
    u, v = edge
    if instance.weight(u, v) == 0.0:
        raise InvalidEdge(f"({u}, {v}) is not an edge")
    a, g = angles.alpha, angles.gamma
    adj = instance.adjacency
    h_u, h_v = instance.field_at(u), instance.field_at(v)
    j_uv = adj[u][v]

    prod_u = math.cos(2 * g * h_u)
    prod_v = math.cos(2 * g * h_v)
    prod_plus = math.cos(2 * g * (h_u + h_v))
    prod_minus = math.cos(2 * g * (h_u - h_v))
    for k in (adj[u].keys() | adj[v].keys()) - {u, v}:
        j_uk = adj[u].get(k, 0.0)
        j_vk = adj[v].get(k, 0.0)
        prod_u *= math.cos(2 * g * j_uk)
        prod_v *= math.cos(2 * g * j_vk)
        prod_plus *= math.cos(2 * g * (j_uk + j_vk))
        prod_minus *= math.cos(2 * g * (j_uk - j_vk))
    part_a = 0.5 * math.sin(4 * a) * math.sin(2 * g * j_uv) * (prod_u + prod_v)
    part_b = 0.5 * math.sin(2 * a) ** 2 * (prod_plus - prod_minus)
    return part_a - part_b


# -- vectorized paths used by the solvers ---------------------------------------

def all_correlations(instance: IsingInstance, angles: Angles) -> CorrelationVector:
    A = instance.arrays
    X, Y = kernels.edge_terms(angles.gamma, A)
    s4 = math.sin(4 * angles.alpha)
    s2 = math.sin(2 * angles.alpha)
    return CorrelationVector(instance.edges, 0.5 * s4 * X - 0.5 * s2 * s2 * Y)


def correlation_derivatives(instance: IsingInstance, angles: Angles):
    """Correlations with their partial derivatives in alpha and gamma.

    Returns three arrays ordered like ``instance.edges``.
    """
    X, Y, dX, dY = kernels.edge_terms_dgamma(angles.gamma, instance.arrays)
    s4, c4 = math.sin(4 * angles.alpha), math.cos(4 * angles.alpha)
    s2sq = math.sin(2 * angles.alpha) ** 2
    M = 0.5 * s4 * X - 0.5 * s2sq * Y
    dM_da = 2.0 * c4 * X - s4 * Y
    dM_dg = 0.5 * s4 * dX - 0.5 * s2sq * dY
    return M, dM_da, dM_dg


def _energy_from_coeffs(offset, a, b, c, alpha):
    s2 = np.sin(2 * alpha)
    return offset + c * s2 + a * np.sin(4 * alpha) - b * s2 * s2


def energy_expectation(instance: IsingInstance, angles: Angles) -> float:
    a, b, c = kernels.energy_coeffs(np.array([angles.gamma]), instance.arrays)
    return float(_energy_from_coeffs(instance.offset, a[0], b[0], c[0], angles.alpha))


def _fit_from_energies(e_plus, e_minus, e_zero):
    q = 0.5 * (e_plus - e_minus)
    r = 0.5 * (e_plus + e_minus)
    return e_zero - r, q, r


def fit_pqr(instance: IsingInstance, gamma: float) -> PQRFit:
    if instance.has_fields:
        raise UnsupportedFields("the cos/sin(4 alpha) fit needs zero external fields")
    e_plus = energy_expectation(instance, Angles(math.pi / 8, gamma))
    e_minus = energy_expectation(instance, Angles(-math.pi / 8, gamma))
    e_zero = energy_expectation(instance, Angles(0.0, gamma))
    p, q, r = _fit_from_energies(e_plus, e_minus, e_zero)
    return PQRFit(p, q, r, gamma)


def optimal_alpha(fit: PQRFit) -> tuple[float, float]:
    """Maximizer of the fitted curve: tan(4a) = q/p with p cos4a >= 0, q sin4a >= 0."""
    if fit.p == 0.0 and fit.q == 0.0:
        return 0.0, fit.r
    return math.atan2(fit.q, fit.p) / 4.0, fit.max_energy


_ALPHA_SCAN = np.linspace(-math.pi / 2, math.pi / 2, 721)[:-1]


def _best_over_alpha(instance: IsingInstance, gammas: np.ndarray):
    """Best energy and maximizing alpha for each gamma."""
    a, b, c = kernels.energy_coeffs(gammas, instance.arrays)
    off = instance.offset
    if not instance.has_fields:
        # same three evaluations as fit_pqr, done for every gamma at once
        e_plus = off + a - 0.5 * b
        e_minus = off - a - 0.5 * b
        p, q, r = _fit_from_energies(e_plus, e_minus, np.full_like(a, off))
        return r + np.hypot(p, q), np.arctan2(q, p) / 4.0
    # fields add a sin(2 alpha) term: scan alpha, then polish per gamma on demand
    grid = _energy_from_coeffs(off, a[:, None], b[:, None], c[:, None], _ALPHA_SCAN[None, :])
    k = np.argmax(grid, axis=1)
    return grid[np.arange(len(gammas)), k], _ALPHA_SCAN[k]


def _polish_alpha(instance: IsingInstance, gamma: float, alpha0: float):
    a, b, c = kernels.energy_coeffs(np.array([gamma]), instance.arrays)
    step = _ALPHA_SCAN[1] - _ALPHA_SCAN[0]
    res = minimize_scalar(
        lambda x: -_energy_from_coeffs(instance.offset, a[0], b[0], c[0], x),
        bounds=(alpha0 - step, alpha0 + step), method="bounded", options={"xatol": 1e-10},
    )
    return float(res.x), float(-res.fun)


def optimize_angles(instance: IsingInstance, grid_n: int = DEFAULT_GRID,
                    xatol: float = 1e-6) -> tuple[Angles, float]:
    """Energy-optimal depth-1 angles: gamma grid on [0, 2 pi], closed-form alpha,
    then bounded refinement of gamma around the best grid point."""
    if grid_n < 3:
        raise ValueError("grid_n must be at least 3")
    if instance.num_edges == 0 and not instance.has_fields:
        return Angles(0.0, 0.0), instance.offset
    grid = np.linspace(0.0, 2.0 * math.pi, grid_n)
    # E(-alpha, -gamma) = E(alpha, gamma): grid point 2 pi - g repeats g, so the
    # first maximizer over the full grid always lies in the lower half
    half = (grid_n + 1) // 2
    best, alphas = _best_over_alpha(instance, grid[:half])
    k = int(np.argmax(best))
    g_best, e_best, a_best = float(grid[k]), float(best[k]), float(alphas[k])

    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid_n - 1)]
    res = minimize_scalar(
        lambda g: -float(_best_over_alpha(instance, np.array([g]))[0][0]),
        bounds=(lo, hi), method="bounded", options={"xatol": xatol},
    )
    if -res.fun > e_best:
        g_best = float(res.x)
        e_vals, a_vals = _best_over_alpha(instance, np.array([g_best]))
        e_best, a_best = float(e_vals[0]), float(a_vals[0])
    if instance.has_fields:
        a_best, e_polished = _polish_alpha(instance, g_best, a_best)
        e_best = max(e_best, e_polished)
    return Angles(a_best, g_best), e_best


def landscape(instance: IsingInstance, alphas, gammas) -> np.ndarray:
    """Energy on the (alpha, gamma) grid, shape (len(alphas), len(gammas))."""
    a, b, c = kernels.energy_coeffs(np.asarray(gammas, dtype=float), instance.arrays)
    al = np.asarray(alphas, dtype=float)[:, None]
    return _energy_from_coeffs(instance.offset, a[None], b[None], c[None], al)


def write_landscape_csv(path, instance: IsingInstance, alphas, gammas) -> Path:
    path = Path(path)
    values = landscape(instance, alphas, gammas)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "gamma", "energy"])
        for i, al in enumerate(alphas):
            for j, ga in enumerate(gammas):
                w.writerow([repr(float(al)), repr(float(ga)), repr(float(values[i, j]))])
    return path


# -- statevector oracle ----------------------------------------------------------

def statevector_expectations(instance: IsingInstance, schedule: Sequence[tuple[float, float]],
                             depth: int | None = None):
    """Exact simulation of the depth-``depth`` QAOA state.

    Returns ``(z, zz, norm)`` where ``z`` maps vertex -> <Z_u> and ``zz`` maps
    edge -> <Z_u Z_v>.
    """
    m = instance.n
    if m > STATEVECTOR_MAX_QUBITS:
        raise SizeLimit(f"statevector simulation is capped at {STATEVECTOR_MAX_QUBITS} qubits")
    depth = len(schedule) if depth is None else depth
    A = instance.arrays
    idx = np.arange(1 << m)
    spins = 1.0 - 2.0 * ((idx[:, None] >> np.arange(m)) & 1)  # (2^m, m)
    cost = spins @ A.h
    if A.eu.shape[0]:
        cost = cost + (spins[:, A.eu] * spins[:, A.ev]) @ A.ew

    psi = np.full(1 << m, (1 << m) ** -0.5, dtype=complex)
    for alpha, gamma in list(schedule)[:depth]:
        psi = psi * np.exp(-1j * gamma * cost)
        ca, sa = math.cos(alpha), -1j * math.sin(alpha)
        for q in range(m):
            view = psi.reshape(-1, 2, 1 << q)
            lo, hi = view[:, 0, :].copy(), view[:, 1, :].copy()
            view[:, 0, :] = ca * lo + sa * hi
            view[:, 1, :] = sa * lo + ca * hi
    prob = np.abs(psi) ** 2
    z_all = prob @ spins
    z = {int(lab): float(z_all[i]) for i, lab in enumerate(A.labels)}
    zz = {}
    for e, (u, v) in enumerate(instance.edges):
        zz[(u, v)] = float(prob @ (spins[:, A.eu[e]] * spins[:, A.ev[e]]))
    return z, zz, float(prob.sum())
