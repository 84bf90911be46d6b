from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rlrqaoa.errors import InvalidBudget, NoAction, SizeLimit
from rlrqaoa.graph import IsingInstance, energy
from rlrqaoa.qaoa import CorrelationVector
from rlrqaoa.rqaoa import (RqaoaConfig, approximation_ratio, best_of_runs, brute_force_exact,
                           clear_angle_cache, greedy_tie_set, run_many, run_rng, run_rqaoa, select_edge_greedy)

from conftest import enumerate_optimum, k2, random_instance, ring, triangle


def cv(values):
    edges = [(i, i + 1) for i in range(len(values))]
    return CorrelationVector(edges, np.array(values, dtype=float))


# -- greedy selection --------------------------------------------------------------------

def test_select_unique_max():
    rng = np.random.default_rng(0)
    for _ in range(20):
        assert select_edge_greedy(cv([0.9, -0.4]), rng) == ((0, 1), 1)


def test_select_tie_frequencies_and_sign():
    rng = np.random.default_rng(1)
    picks = [select_edge_greedy(cv([0.7, -0.7]), rng) for _ in range(10_000)]
    freq = sum(1 for e, _ in picks if e == (1, 2)) / len(picks)
    assert abs(freq - 0.5) <= 0.05
    assert all(s == -1 for e, s in picks if e == (1, 2))
    assert all(s == 1 for e, s in picks if e == (0, 1))


def test_select_zero_correlation_sign():
    assert select_edge_greedy(cv([0.0]), np.random.default_rng(0)) == ((0, 1), 1)


def test_select_empty():
    with pytest.raises(NoAction):
        select_edge_greedy(CorrelationVector([], np.zeros(0)), np.random.default_rng(0))


def test_tie_tolerance():
    assert greedy_tie_set(cv([0.5, 0.5 - 5e-9, 0.4])).tolist() == [0, 1]
    assert greedy_tie_set(cv([0.5, 0.5 - 5e-9, 0.4]), 0.0).tolist() == [0]


def test_zero_tolerance_unique_max_is_deterministic():
    picks = {select_edge_greedy(cv([0.3, -0.8, 0.79]), np.random.default_rng(s), 0.0) for s in range(50)}
    assert picks == {((1, 2), -1)}


# -- exact solver ---------------------------------------------------------------------------

def test_exact_k2():
    res = brute_force_exact(k2())
    assert (res.energy, res.degeneracy) == (1.0, 2)


def test_exact_antiferro_triangle():
    res = brute_force_exact(triangle(-1.0))
    assert (res.energy, res.degeneracy) == (1.0, 6)


def test_exact_empty_instance():
    res = brute_force_exact(IsingInstance(3, {}, offset=4.0))
    assert res.energy == 4.0 and res.degeneracy == 8


def test_exact_matches_enumeration(rng):
    for _ in range(10):
        inst = random_instance(rng, int(rng.integers(2, 10)), fields=bool(rng.integers(2)),
                               model=rng.choice(["gaussian", "bimodal"]))
        best, count = enumerate_optimum(inst)
        res = brute_force_exact(inst)
        assert res.energy == pytest.approx(best, abs=1e-9)
        assert res.degeneracy == count
        assert energy(inst, res.assignment) == pytest.approx(best, abs=1e-9)


def test_exact_size_guard():
    with pytest.raises(SizeLimit):
        brute_force_exact(IsingInstance(31, {(0, 1): 1.0}))


# -- RQAOA runs ----------------------------------------------------------------------------

def test_k2_zero_iterations():
    res = run_rqaoa(k2(), RqaoaConfig(n_c=2))
    assert res.energy == 1.0 and res.tie_counts == [] and res.trajectory == []


def test_ring_of_disagrees_reaches_optimum():
    inst = ring(6, -1.0)
    exact = brute_force_exact(inst).energy
    for i in range(10):
        res = run_rqaoa(inst, RqaoaConfig(n_c=3, seed=i), exact_energy=exact)
        assert res.energy == exact and res.approx_ratio == 1.0


def test_run_invariants(rng):
    for i in range(8):
        n = int(rng.integers(5, 12))
        inst = random_instance(rng, n, fields=bool(rng.integers(2)), model=rng.choice(["gaussian", "bimodal"]))
        n_c = int(rng.integers(1, 5))
        exact = brute_force_exact(inst).energy
        res = run_rqaoa(inst, RqaoaConfig(n_c=n_c, grid_n=300, seed=i), exact_energy=exact)
        assert len(res.tie_counts) == n - n_c
        assert energy(inst, res.assignment) == pytest.approx(res.energy, abs=1e-9)
        assert set(np.unique(res.assignment).tolist()) <= {-1, 1}
        assert res.energy <= exact + 1e-9
        if exact > 0:
            assert res.approx_ratio <= 1 + 1e-12
        else:
            assert res.approx_ratio is None


def test_tracked_offset_equals_reconstructed_energy(rng):
    from rlrqaoa.graph import ReconstructionMap, contract, reconstruct
    from rlrqaoa.qaoa import all_correlations

    inst = random_instance(rng, 9)
    res = run_rqaoa(inst, RqaoaConfig(n_c=3, grid_n=300))
    cur, rmap = inst, ReconstructionMap(inst.n_original)
    for (e, s, _), angles in zip(res.trajectory, res.angle_log):
        assert abs(all_correlations(cur, angles)[e]) == pytest.approx(_, abs=1e-12)
        cur, rec = contract(cur, e, s)
        rmap = rmap.then(rec)
    final = brute_force_exact(cur)
    assert energy(inst, reconstruct(rmap, final.assignment)) == pytest.approx(final.energy, abs=1e-9)


def test_empty_intermediate_instance():
    # contracting (0,1) with sign -1 cancels both remaining couplings
    inst = IsingInstance(4, {(0, 1): -3.0, (0, 2): 1.0, (1, 2): 1.0})
    res = run_rqaoa(inst, RqaoaConfig(n_c=1))
    assert len(res.tie_counts) == 3
    assert res.energy == pytest.approx(brute_force_exact(inst).energy)


def test_run_requires_n_at_least_nc():
    with pytest.raises(ValueError):
        run_rqaoa(k2(), RqaoaConfig(n_c=3))


def test_config_validation():
    with pytest.raises(ValueError):
        RqaoaConfig(n_c=0)
    with pytest.raises(ValueError):
        RqaoaConfig(tie_tolerance=-1)


def test_runs_are_reproducible_and_cache_independent(rng):
    inst = random_instance(rng, 10, model="bimodal")
    cfg = RqaoaConfig(n_c=3, grid_n=300, seed=5)
    a = [r.to_record() for r in run_many(inst, cfg, 4)]
    clear_angle_cache()
    b = [r.to_record() for r in run_many(inst, cfg, 4)]
    assert a == b


def test_warm_start_runs(rng):
    inst = random_instance(rng, 9)
    res = run_rqaoa(inst, RqaoaConfig(n_c=3, grid_n=300, warm_start=True))
    assert energy(inst, res.assignment) == pytest.approx(res.energy)


def test_run_rng_streams_independent():
    assert run_rng(3, 0).random() != run_rng(3, 1).random()
    assert run_rng(3, 1).random() == run_rng(3, 1).random()


def test_approximation_ratio_rules():
    assert approximation_ratio(3.0, 4.0) == 0.75
    assert approximation_ratio(3.0, 0.0) is None
    assert approximation_ratio(3.0, -1.0) is None
    assert approximation_ratio(3.0, None) is None


# -- best of runs -----------------------------------------------------------------------------

def test_best_of_one_equals_single_run(rng):
    inst = random_instance(rng, 9, model="bimodal")
    cfg = RqaoaConfig(n_c=3, grid_n=300, seed=2)
    assert best_of_runs(inst, cfg, 1).to_record() == run_rqaoa(inst, cfg).to_record()


def test_best_of_budget():
    with pytest.raises(InvalidBudget):
        best_of_runs(k2(), RqaoaConfig(n_c=1), 0)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4))
def test_best_of_nested_monotone(seed, k):
    inst = random_instance(np.random.default_rng(seed), 9, model="bimodal")
    cfg = RqaoaConfig(n_c=3, grid_n=200, seed=seed)
    assert best_of_runs(inst, cfg, 2 * k).energy >= best_of_runs(inst, cfg, k).energy


def test_early_stops_agree_with_full_search(rng):
    inst = random_instance(rng, 10, model="bimodal")
    cfg = RqaoaConfig(n_c=3, grid_n=300, seed=1)
    full = best_of_runs(inst, cfg, 12)
    det = best_of_runs(inst, cfg, 12, stop_if_deterministic=True)
    assert det.energy == full.energy
    stop = best_of_runs(inst, cfg, 12, stop_above=-1e9)
    assert stop.runs_used == 1


def test_parallel_runs_match_sequential(rng):
    inst = random_instance(rng, 10, model="bimodal")
    cfg = RqaoaConfig(n_c=3, grid_n=300, seed=9)
    seq = [r.to_record() for r in run_many(inst, cfg, 4, jobs=1)]
    par = [r.to_record() for r in run_many(inst, cfg, 4, jobs=2)]
    assert seq == par
