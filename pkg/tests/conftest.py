from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from rlrqaoa.graph import IsingInstance


def random_instance(rng, n, model="gaussian", density=0.6, fields=False, offset=0.0):
    """Erdos-Renyi style instance on labels 0..n-1 (at least one edge when n >= 2)."""
    weights = {}
    for u, v in itertools.combinations(range(n), 2):
        if rng.random() < density:
            weights[(u, v)] = float(rng.normal()) if model == "gaussian" else float(rng.choice([-1.0, 1.0]))
    if n >= 2 and not weights:
        weights[(0, 1)] = 1.0
    h = {}
    if fields:
        h = {u: float(rng.normal()) for u in range(n)}
    return IsingInstance(n, weights, h, offset=offset)


def naive_energy(instance, x):
    """Term-by-term double loop over all vertex pairs."""
    labels = sorted(instance.vertices)
    total = instance.offset
    for u in labels:
        total += instance.fields.get(u, 0.0) * x[u]
    for i, u in enumerate(labels):
        for v in labels[i + 1:]:
            total += instance.weights.get((u, v), 0.0) * x[u] * x[v]
    return total


def all_assignments(labels):
    for bits in itertools.product((1, -1), repeat=len(labels)):
        yield dict(zip(labels, bits))


def enumerate_optimum(instance):
    labels = sorted(instance.vertices)
    vals = [(naive_energy(instance, x), x) for x in all_assignments(labels)]
    best = max(v for v, _ in vals)
    count = sum(1 for v, _ in vals if abs(v - best) <= 1e-9)
    return best, count


def dense_qaoa_state(instance, schedule):
    """Kronecker-product statevector: diagonal cost phase, then exp(-i a X) per qubit via expm."""
    from scipy.linalg import expm

    labels = sorted(instance.vertices)
    m = len(labels)
    idx = {v: i for i, v in enumerate(labels)}
    Z = np.diag([1.0, -1.0])
    I = np.eye(2)

    def op(site_ops):
        out = np.array([[1.0]])
        for q in range(m):
            out = np.kron(out, site_ops.get(q, I))
        return out

    C = np.zeros((2 ** m, 2 ** m))
    for (u, v), w in instance.weights.items():
        C += w * op({idx[u]: Z, idx[v]: Z})
    for u, hu in instance.fields.items():
        C += hu * op({idx[u]: Z})
    X = np.array([[0.0, 1.0], [1.0, 0.0]])
    B = sum(op({q: X}) for q in range(m))
    psi = np.full(2 ** m, 2 ** (-m / 2), dtype=complex)
    for a, g in schedule:
        psi = np.exp(-1j * g * np.diag(C)) * psi
        psi = expm(-1j * a * B) @ psi
    return psi, (lambda ops: float(np.real(np.vdot(psi, op(ops) @ psi)))), idx, Z


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def k2(weight=1.0, **kw):
    return IsingInstance(2, {(0, 1): weight}, **kw)


def triangle(weight=1.0):
    return IsingInstance(3, {(0, 1): weight, (0, 2): weight, (1, 2): weight})


def ring(n, weight=-1.0):
    return IsingInstance(n, {tuple(sorted((i, (i + 1) % n))): weight for i in range(n)})


PI = math.pi


# -- extended-precision policy oracle ---------------------------------------------------------

def mp_zz(instance, alpha, gamma, u, v):
    """Depth-1 <Z_u Z_v> as dense sums over all other vertices, in mpmath."""
    import mpmath as mp

    J = lambda a, b: mp.mpf(instance.weights.get((min(a, b), max(a, b)), 0.0))
    h = lambda a: mp.mpf(instance.fields.get(a, 0.0))
    g2 = 2 * gamma
    others = [w for w in sorted(instance.vertices) if w not in (u, v)]
    pu = mp.cos(g2 * h(u)) * mp.fprod(mp.cos(g2 * J(u, w)) for w in others)
    pv = mp.cos(g2 * h(v)) * mp.fprod(mp.cos(g2 * J(v, w)) for w in others)
    X = mp.sin(g2 * J(u, v)) * (pu + pv)
    plus = mp.cos(g2 * (h(u) + h(v))) * mp.fprod(mp.cos(g2 * (J(u, w) + J(v, w))) for w in others)
    minus = mp.cos(g2 * (h(u) - h(v))) * mp.fprod(mp.cos(g2 * (J(u, w) - J(v, w))) for w in others)
    return mp.sin(4 * alpha) / 2 * X - mp.sin(2 * alpha) ** 2 / 2 * (plus - minus)


def mp_log_prob(instance, kind, alpha, gamma, beta_of, k):
    """log pi(k) for rlrqaoa (support = edges) or rlrone (support = (edge, +1), (edge, -1) pairs).

    ``beta_of(e)`` returns the inverse temperature(s) for edge ``e``: a scalar for
    rlrqaoa, a (plus, minus) pair for rlrone.
    """
    import mpmath as mp

    if kind == "rlrqaoa":
        logits = [beta_of(e) * abs(mp_zz(instance, alpha, gamma, *e)) for e in instance.edges]
    else:
        logits = [b for e in instance.edges for b in beta_of(e)]
    top = max(logits)
    return logits[k] - top - mp.log(mp.fsum(mp.exp(x - top) for x in logits))


def _mp_beta_of(params, arrays, iteration):
    def pick(B, e):
        u, v = e
        if params.beta_mode == "one-all":
            return B[u, v]
        if params.beta_mode == "all":
            return B[iteration]
        return B[iteration, u, v]

    if params.kind == "rlrqaoa":
        return lambda e: pick(arrays["betas"], e)
    return lambda e: (pick(arrays["betas_plus"], e), pick(arrays["betas_minus"], e))


def fd_gradient_errors(instance, params, iteration, k, step=1e-6, dps=40):
    """Central differences of ``mp_log_prob`` against ``PolicyStep.grad_log_prob``.

    Every parameter coordinate is perturbed in extended precision, so roundoff
    does not pollute small components. Returns (max relative error, number of
    coordinates compared). Where the difference quotient is exactly zero the
    relative error is undefined; the analytic component must then be below 1e-12.
    """
    import mpmath as mp

    from rlrqaoa.policies import PolicyStep

    analytic = PolicyStep(instance, params, iteration).grad_log_prob(k)
    worst, compared = 0.0, 0
    with mp.workdps(dps):
        h = mp.mpf(step)
        base = {name: np.array([mp.mpf(float(x)) for x in arr.ravel()], dtype=object).reshape(arr.shape)
                for name, arr in params.named_arrays()}

        def logp(arrays):
            a = arrays["alphas"][iteration] if params.kind == "rlrqaoa" else 0
            g = arrays["gammas"][iteration] if params.kind == "rlrqaoa" else 0
            return mp_log_prob(instance, params.kind, a, g, _mp_beta_of(params, arrays, iteration), k)

        for name, arr in params.named_arrays():
            an = getattr(analytic, name)
            for idx in np.ndindex(arr.shape):
                plus = {n_: b.copy() for n_, b in base.items()}
                minus = {n_: b.copy() for n_, b in base.items()}
                plus[name][idx] += h
                minus[name][idx] -= h
                fd = float((logp(plus) - logp(minus)) / (2 * h))
                if fd == 0.0:
                    if abs(an[idx]) > 1e-12:
                        return float("inf"), compared
                    continue
                worst = max(worst, abs(an[idx] - fd) / abs(fd))
                compared += 1
    return worst, compared


def random_policy_case(rng, kind, beta_mode="one-all"):
    """Random instance (possibly contracted once), parameters and action for gradient checks."""
    from rlrqaoa.graph import contract
    from rlrqaoa.policies import PolicyParams

    n = int(rng.integers(3, 7))
    inst = random_instance(rng, n, fields=bool(rng.integers(2)), model=rng.choice(["gaussian", "bimodal"]))
    horizon = 2
    if rng.random() < 0.4 and inst.num_edges > 1:
        contracted, _ = contract(inst, inst.edges[int(rng.integers(inst.num_edges))], int(rng.choice([-1, 1])))
        if contracted.num_edges:
            inst = contracted
    params = PolicyParams.init(kind, n, horizon, alphas=rng.uniform(-PI, PI, horizon),
                               gammas=rng.uniform(-PI, PI, horizon), beta_mode=beta_mode)
    for _, arr in params.named_arrays():
        if arr is not params.alphas and arr is not params.gammas:
            arr[...] = rng.uniform(-5, 30, arr.shape)
    iteration = int(rng.integers(horizon))
    size = inst.num_edges * (1 if kind == "rlrqaoa" else 2)
    return inst, params, iteration, int(rng.integers(size))


# -- acceptance report --------------------------------------------------------------------------

_ACCEPTANCE: list[str] = []


@pytest.fixture
def criterion():
    """``criterion(k, ok, detail)`` records one PASS/FAIL line and returns ``ok``."""

    def record(k, ok, detail=""):
        line = f"CRITERION {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        _ACCEPTANCE.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split(":")[0].split()[-1])):
            terminalreporter.write_line(line)
