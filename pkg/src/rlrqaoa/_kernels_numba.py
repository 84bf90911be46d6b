"""Numba kernels over the CSR view of an instance.

Edge terms follow the depth-1 closed form: for edge (u, v) with phase ``g``

    X = sin(2gJ_uv) [cos(2g h_u) prod_{k in N(u)-v} cos(2g J_uk)
                     + cos(2g h_v) prod_{k in N(v)-u} cos(2g J_vk)]
    Y = cos(2g(h_u+h_v)) prod_k cos(2g(J_uk+J_vk))
        - cos(2g(h_u-h_v)) prod_k cos(2g(J_uk-J_vk))

and ``<Z_u Z_v> = sin(4a)/2 X - sin(2a)^2/2 Y``. Outside common neighbours the
two Y products share their factors, so only triangles cost extra trig.
"""
from __future__ import annotations

import math

import numpy as np

from ._accel import njit


@njit
def _slot_cos(g2, nbr_w, out):
    for s in range(nbr_w.shape[0]):
        out[s] = math.cos(g2 * nbr_w[s])


@njit
def _edge_xy(g2, W, h, eu, ev, ew, ptr, nbr, nbr_w, cos_slot, X, Y):
    for e in range(eu.shape[0]):
        u = eu[e]
        v = ev[e]
        pu = math.cos(g2 * h[u]) if h[u] != 0.0 else 1.0
        pv = math.cos(g2 * h[v]) if h[v] != 0.0 else 1.0
        shared = 1.0
        plus = 1.0
        minus = 1.0
        for s in range(ptr[u], ptr[u + 1]):
            k = nbr[s]
            if k == v:
                continue
            pu *= cos_slot[s]
            jv = W[v, k]
            if jv == 0.0:
                shared *= cos_slot[s]
            else:
                ju = nbr_w[s]
                plus *= math.cos(g2 * (ju + jv))
                minus *= math.cos(g2 * (ju - jv))
        for s in range(ptr[v], ptr[v + 1]):
            k = nbr[s]
            if k == u:
                continue
            pv *= cos_slot[s]
            if W[u, k] == 0.0:
                shared *= cos_slot[s]
        X[e] = math.sin(g2 * ew[e]) * (pu + pv)
        if h[u] == 0.0 and h[v] == 0.0:
            Y[e] = shared * (plus - minus)
        else:
            Y[e] = shared * (math.cos(g2 * (h[u] + h[v])) * plus
                             - math.cos(g2 * (h[u] - h[v])) * minus)


@njit
def edge_terms(gamma, W, h, eu, ev, ew, ptr, nbr, nbr_w):
    g2 = 2.0 * gamma
    cos_slot = np.empty(nbr_w.shape[0])
    _slot_cos(g2, nbr_w, cos_slot)
    X = np.empty(eu.shape[0])
    Y = np.empty(eu.shape[0])
    _edge_xy(g2, W, h, eu, ev, ew, ptr, nbr, nbr_w, cos_slot, X, Y)
    return X, Y


@njit
def vertex_terms(gamma, h, ptr, nbr_w):
    g2 = 2.0 * gamma
    m = h.shape[0]
    out = np.empty(m)
    for u in range(m):
        p = math.sin(g2 * h[u])
        if p != 0.0:
            for s in range(ptr[u], ptr[u + 1]):
                p *= math.cos(g2 * nbr_w[s])
        out[u] = p
    return out


@njit
def energy_coeffs(gammas, W, h, eu, ev, ew, ptr, nbr, nbr_w):
    """Per phase angle: (a, b, c) with energy = offset + c sin2a + a sin4a - b sin^2 2a."""
    G = gammas.shape[0]
    E = eu.shape[0]
    a = np.zeros(G)
    b = np.zeros(G)
    c = np.zeros(G)
    cos_slot = np.empty(nbr_w.shape[0])
    X = np.empty(E)
    Y = np.empty(E)
    has_fields = False
    for u in range(h.shape[0]):
        if h[u] != 0.0:
            has_fields = True
    for t in range(G):
        g2 = 2.0 * gammas[t]
        _slot_cos(g2, nbr_w, cos_slot)
        _edge_xy(g2, W, h, eu, ev, ew, ptr, nbr, nbr_w, cos_slot, X, Y)
        sa = 0.0
        sb = 0.0
        for e in range(E):
            sa += ew[e] * X[e]
            sb += ew[e] * Y[e]
        a[t] = 0.5 * sa
        b[t] = 0.5 * sb
        if has_fields:
            sc = 0.0
            for u in range(h.shape[0]):
                if h[u] != 0.0:
                    p = math.sin(g2 * h[u])
                    for s in range(ptr[u], ptr[u + 1]):
                        p *= cos_slot[s]
                    sc += h[u] * p
            c[t] = sc
    return a, b, c


@njit
def edge_terms_dgamma(gamma, W, h, eu, ev, ew, ptr, nbr, nbr_w):
    """X, Y and their derivatives with respect to the phase angle."""
    g2 = 2.0 * gamma
    E = eu.shape[0]
    X = np.empty(E)
    Y = np.empty(E)
    dX = np.empty(E)
    dY = np.empty(E)
    for e in range(E):
        u = eu[e]
        v = ev[e]
        # (value, derivative) pairs, extended factor by factor
        pu = math.cos(g2 * h[u])
        dpu = -2.0 * h[u] * math.sin(g2 * h[u])
        pv = math.cos(g2 * h[v])
        dpv = -2.0 * h[v] * math.sin(g2 * h[v])
        qp = math.cos(g2 * (h[u] + h[v]))
        dqp = -2.0 * (h[u] + h[v]) * math.sin(g2 * (h[u] + h[v]))
        qm = math.cos(g2 * (h[u] - h[v]))
        dqm = -2.0 * (h[u] - h[v]) * math.sin(g2 * (h[u] - h[v]))
        for s in range(ptr[u], ptr[u + 1]):
            k = nbr[s]
            if k == v:
                continue
            ju = nbr_w[s]
            f = math.cos(g2 * ju)
            df = -2.0 * ju * math.sin(g2 * ju)
            dpu = dpu * f + pu * df
            pu *= f
            jv = W[v, k]
            fp = math.cos(g2 * (ju + jv))
            dfp = -2.0 * (ju + jv) * math.sin(g2 * (ju + jv))
            fm = math.cos(g2 * (ju - jv))
            dfm = -2.0 * (ju - jv) * math.sin(g2 * (ju - jv))
            dqp = dqp * fp + qp * dfp
            qp *= fp
            dqm = dqm * fm + qm * dfm
            qm *= fm
        for s in range(ptr[v], ptr[v + 1]):
            k = nbr[s]
            if k == u:
                continue
            jv = nbr_w[s]
            f = math.cos(g2 * jv)
            df = -2.0 * jv * math.sin(g2 * jv)
            dpv = dpv * f + pv * df
            pv *= f
            if W[u, k] == 0.0:
                dqp = dqp * f + qp * df
                qp *= f
                dqm = dqm * f + qm * df
                qm *= f
        J = ew[e]
        sJ = math.sin(g2 * J)
        dsJ = 2.0 * J * math.cos(g2 * J)
        X[e] = sJ * (pu + pv)
        dX[e] = dsJ * (pu + pv) + sJ * (dpu + dpv)
        Y[e] = qp - qm
        dY[e] = dqp - dqm
    return X, Y, dX, dY


@njit
def brute_force(h, ptr, nbr, nbr_w, offset, symmetric, tol):
    """Gray-code enumeration of all spin states.

    Returns (best energy, bitmask of the best state, number of maximizers).
    Bit ``i`` set means spin ``i`` is -1. With ``symmetric`` the last spin is
    pinned to +1 and the count is doubled.
    """
    m = h.shape[0]
    if m == 0:
        return offset, 0, 1
    spins = np.ones(m)
    local = h.copy()
    cur = offset
    for i in range(m):
        cur += h[i]
        for s in range(ptr[i], ptr[i + 1]):
            local[i] += nbr_w[s]
            if nbr[s] > i:
                cur += nbr_w[s]
    n_free = m - 1 if symmetric else m
    best = cur
    best_bits = 0
    count = 1
    bits = 0
    total = 1 << n_free
    for t in range(1, total):
        i = 0
        while (t >> i) & 1 == 0:
            i += 1
        si = spins[i]
        cur -= 2.0 * si * local[i]
        spins[i] = -si
        for s in range(ptr[i], ptr[i + 1]):
            local[nbr[s]] -= 2.0 * si * nbr_w[s]
        bits ^= 1 << i
        if cur > best + tol:
            best = cur
            best_bits = bits
            count = 1
        elif cur >= best - tol:
            count += 1
    if symmetric:
        count *= 2
    return best, best_bits, count
