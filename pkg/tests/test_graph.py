from __future__ import annotations

import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rlrqaoa import graph
from rlrqaoa.errors import CorruptMap, InvalidAction, InvalidAssignment, MalformedInstance
from rlrqaoa.graph import (ContractionRecord, IsingInstance, ReconstructionMap, contract, energy,
                           reconstruct, spin_sign)

from conftest import all_assignments, k2, naive_energy, random_instance, triangle


# -- energy ------------------------------------------------------------------------------

def test_energy_k2_aligned():
    assert energy(k2(), {0: 1, 1: 1}) == 1.0


def test_energy_k2_opposite():
    assert energy(k2(), {0: 1, 1: -1}) == -1.0


def test_energy_matches_naive_resummation(rng):
    for _ in range(20):
        inst = random_instance(rng, 8, fields=bool(rng.integers(2)), offset=float(rng.normal()))
        x = {v: int(s) for v, s in zip(range(8), rng.choice([-1, 1], size=8))}
        assert energy(inst, x) == pytest.approx(naive_energy(inst, x), abs=1e-12)


def test_energy_accepts_label_indexed_array(rng):
    inst = random_instance(rng, 6)
    x = rng.choice([-1, 1], size=6)
    assert energy(inst, x) == pytest.approx(energy(inst, dict(enumerate(x.tolist()))))


def test_energy_missing_vertex():
    with pytest.raises(InvalidAssignment):
        energy(k2(), {0: 1})


# -- instance invariants ------------------------------------------------------------------

@pytest.mark.parametrize("weights", [{(0, 0): 1.0}, {(0, 1): 0.0}, {(0, 1): 1.0, (1, 0): 2.0}, {(0, 5): 1.0}])
def test_instance_rejects_bad_edges(weights):
    with pytest.raises(MalformedInstance):
        IsingInstance(3, weights)


def test_instance_normalizes_pairs_and_drops_zero_fields():
    inst = IsingInstance(3, {(2, 0): 1.5}, {1: 0.0, 2: 0.5})
    assert inst.edges == [(0, 2)]
    assert inst.fields == {2: 0.5}


# -- contraction ----------------------------------------------------------------------------

def test_contract_triangle_plus():
    out, rec = contract(triangle(), (0, 1), +1)
    assert out.vertices == {0, 2}
    assert out.weights == {(0, 2): 2.0}
    assert out.offset == 1.0
    assert rec == ContractionRecord(eliminated=1, anchor=0, sign=1)


def test_contract_triangle_minus_cancels():
    out, _ = contract(triangle(), (0, 1), -1)
    assert out.vertices == {0, 2}
    assert out.num_edges == 0
    assert out.offset == -1.0


def test_contract_missing_edge():
    inst = IsingInstance(3, {(0, 1): 1.0})
    with pytest.raises(InvalidAction):
        contract(inst, (0, 2), 1)


def test_contract_folds_fields():
    inst = IsingInstance(3, {(0, 1): 1.0, (1, 2): 2.0}, {0: 0.5, 1: -0.25})
    out, _ = contract(inst, (0, 1), -1)
    assert out.fields == {0: 0.75}
    assert out.weights == {(0, 2): -2.0}


def _check_conservation(inst):
    for (u, v) in inst.edges:
        for e in ((u, v), (v, u)):
            for sign in (1, -1):
                out, rec = contract(inst, e, sign)
                assert out.n == inst.n - 1
                assert all(a < b for a, b in out.edges)
                rmap = ReconstructionMap(inst.n_original, (rec,))
                for x in all_assignments(sorted(out.vertices)):
                    lifted = reconstruct(rmap, x)
                    assert energy(out, x) == pytest.approx(energy(inst, lifted), abs=1e-9)


def test_contraction_conserves_energy_exhaustively(rng):
    for _ in range(5):
        n = int(rng.integers(3, 8))
        _check_conservation(random_instance(rng, n, fields=bool(rng.integers(2)),
                                            model=rng.choice(["gaussian", "bimodal"])))


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 7), st.integers(0, 2 ** 31 - 1), st.booleans())
def test_contraction_conservation_property(n, seed, fields):
    _check_conservation(random_instance(np.random.default_rng(seed), n, fields=fields, model="bimodal"))


# -- reconstruction ----------------------------------------------------------------------------

def test_reconstruct_identity():
    x = reconstruct(ReconstructionMap(3), {0: 1, 1: -1, 2: 1})
    assert x.tolist() == [1, -1, 1]


def test_reconstruct_single_record():
    rmap = ReconstructionMap(2, (ContractionRecord(1, 0, -1),))
    assert reconstruct(rmap, {0: 1}).tolist() == [1, -1]


def test_reconstruct_chain_on_triangle():
    inst = triangle()
    a, r1 = contract(inst, (0, 1), 1)
    b, r2 = contract(a, (0, 2), 1)
    rmap = ReconstructionMap(3).then(r1).then(r2)
    x = reconstruct(rmap, {0: 1})
    assert b.offset == 3.0
    assert energy(inst, x) == b.offset


def test_reconstruct_unassigned_anchor():
    rmap = ReconstructionMap(3, (ContractionRecord(1, 2, 1),))
    with pytest.raises(CorruptMap):
        reconstruct(rmap, {0: 1})


def test_map_rejects_double_elimination():
    with pytest.raises(CorruptMap):
        ReconstructionMap(3, (ContractionRecord(1, 0, 1), ContractionRecord(1, 2, 1)))


def test_record_validation():
    with pytest.raises(ValueError):
        ContractionRecord(1, 1, 1)
    with pytest.raises(ValueError):
        ContractionRecord(1, 0, 0)


def test_spin_sign_zero_is_plus():
    assert spin_sign(0.0) == 1 and spin_sign(-0.0) == 1 and spin_sign(-1e-300) == -1


# -- serialization ---------------------------------------------------------------------------

def test_json_round_trip_is_exact(rng):
    inst = random_instance(rng, 7, fields=True, offset=0.1)
    inst = contract(inst, inst.edges[0], -1)[0].with_metadata(weight_model="gaussian", seed=3)
    back = graph.loads(graph.dumps(inst))
    assert back.key() == inst.key()
    assert back.metadata["seed"] == 3
    assert graph.dumps(back) == graph.dumps(inst)


def test_json_document_shape():
    doc = json.loads(graph.dumps(k2().with_metadata(weight_model="bimodal", seed=1)))
    assert doc == {"n": 2, "edges": [[0, 1, 1.0]], "metadata": {"weight_model": "bimodal", "seed": 1}}


@pytest.mark.parametrize("text", ["not json", "[]", '{"edges": []}', '{"n": 2, "edges": [[0, 0, 1]]}',
                                  '{"n": 2, "edges": [[0, 1, 1], [1, 0, 2]]}', '{"n": 2, "edges": [[0, 1]]}'])
def test_malformed_documents(text):
    with pytest.raises(MalformedInstance):
        graph.loads(text)


def test_compact_arrays_consistent(rng):
    inst = random_instance(rng, 9, fields=True)
    A = inst.arrays
    assert np.allclose(A.W, A.W.T)
    for e, (u, v) in enumerate(zip(A.eu, A.ev)):
        assert inst.weight(int(A.labels[u]), int(A.labels[v])) == A.ew[e]
    for i in range(len(A.labels)):
        nb = A.nbr[A.ptr[i]:A.ptr[i + 1]]
        assert sorted(nb.tolist()) == sorted(np.flatnonzero(A.W[i]).tolist())


def test_energy_of_empty_instance_is_offset():
    inst = IsingInstance(3, {}, offset=2.5)
    for x in itertools.product((1, -1), repeat=3):
        assert energy(inst, dict(enumerate(x))) == 2.5
