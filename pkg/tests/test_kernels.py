"""The numba CSR kernels and the dense numpy kernels must agree."""
from __future__ import annotations

import os
import subprocess
import sys

import numpy as np
import pytest

from rlrqaoa import kernels
from rlrqaoa._accel import USE_NUMBA
from rlrqaoa.graph import IsingInstance, contract
from rlrqaoa.rqaoa import brute_force_exact

from conftest import enumerate_optimum, random_instance

nb = kernels.get_backend("numba")
npy = kernels.get_backend("numpy")


def _args(inst):
    A = inst.arrays
    return A.W, A.h, A.eu, A.ev, A.ew, A.ptr, A.nbr, A.nbr_w


@pytest.mark.parametrize("fields", [False, True])
def test_backends_agree(rng, fields):
    for _ in range(10):
        inst = random_instance(rng, int(rng.integers(2, 12)), fields=fields, density=rng.uniform(0.2, 0.9))
        if rng.random() < 0.5 and inst.num_edges:
            inst = contract(inst, inst.edges[0], int(rng.choice([-1, 1])))[0]
        if inst.num_edges == 0:
            continue
        g = rng.uniform(-5, 5)
        gammas = rng.uniform(-5, 5, 37)
        for x, y in zip(nb.edge_terms(g, *_args(inst)), npy.edge_terms(g, *_args(inst))):
            np.testing.assert_allclose(x, y, atol=1e-13)
        for x, y in zip(nb.edge_terms_dgamma(g, *_args(inst)), npy.edge_terms_dgamma(g, *_args(inst))):
            np.testing.assert_allclose(x, y, atol=1e-12)
        for x, y in zip(nb.energy_coeffs(gammas, *_args(inst)), npy.energy_coeffs(gammas, *_args(inst))):
            np.testing.assert_allclose(x, y, atol=1e-12)
        A = inst.arrays
        np.testing.assert_allclose(nb.vertex_terms(g, A.h, A.ptr, A.nbr_w),
                                   npy.vertex_terms(g, A.h, A.ptr, A.nbr_w), atol=1e-13)


@pytest.mark.parametrize("fields", [False, True])
def test_brute_force_backends_agree_with_enumeration(rng, fields):
    for _ in range(8):
        inst = random_instance(rng, int(rng.integers(1, 11)), fields=fields, model=rng.choice(["gaussian", "bimodal"]),
                               offset=0.5)
        A = inst.arrays
        best, count = enumerate_optimum(inst)
        tol = 1e-9 * (1 + np.abs(A.ew).sum() + np.abs(A.h).sum())
        for k in (nb, npy):
            e, bits, c = k.brute_force(A.h, A.ptr, A.nbr, A.nbr_w, inst.offset, not fields, tol)
            assert e == pytest.approx(best, abs=1e-9)
            assert c == count


def test_brute_force_reports_a_maximizer(rng):
    inst = random_instance(rng, 10, fields=True)
    res = brute_force_exact(inst)
    from rlrqaoa.graph import energy
    assert energy(inst, res.assignment) == pytest.approx(res.energy, abs=1e-12)


def test_env_flag_selects_numpy_backend():
    code = "from rlrqaoa import kernels; print(kernels.backend_name())"
    env = dict(os.environ, RLRQAOA_NUMBA="0")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_default_backend_is_numba():
    assert USE_NUMBA == (os.environ.get("RLRQAOA_NUMBA", "1").lower() not in ("0", "false", "no", "off"))


def test_numpy_backend_end_to_end():
    """A full RQAOA run under the fallback gives the same result as the default backend."""
    code = (
        "import json; from rlrqaoa.graph import IsingInstance; from rlrqaoa.rqaoa import RqaoaConfig, run_rqaoa\n"
        "import numpy as np; r = np.random.default_rng(4)\n"
        "w = {(u, v): float(r.normal()) for u in range(11) for v in range(u + 1, 11) if r.random() < 0.4}\n"
        "res = run_rqaoa(IsingInstance(11, w), RqaoaConfig(n_c=4, grid_n=400))\n"
        "print(json.dumps([res.energy, res.assignment.tolist()]))"
    )
    outs = []
    for flag in ("0", "1"):
        env = dict(os.environ, RLRQAOA_NUMBA=flag)
        outs.append(subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                                   check=True).stdout)
    assert outs[0] == outs[1]


def test_empty_edge_wrappers():
    inst = IsingInstance(3, {}, {0: 1.0})
    X, Y = kernels.edge_terms(0.3, inst.arrays)
    assert X.shape == (0,) and Y.shape == (0,)
    a, b, c = kernels.energy_coeffs([0.1, 0.2], inst.arrays)
    assert np.all(a == 0) and np.all(b == 0)
