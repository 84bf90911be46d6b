"""Ising instances, contraction and solution reconstruction.

An instance stores couplings keyed by unordered label pairs ``(u, v)`` with
``u < v``. Vertices keep their original labels through every contraction so
that anything indexed by label pairs stays meaningful along a recursion.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from .errors import CorruptMap, InvalidAction, InvalidAssignment, MalformedInstance

Edge = tuple[int, int]


def _pair(u: int, v: int) -> Edge:
    u, v = int(u), int(v)
    return (u, v) if u < v else (v, u)


def spin_sign(x: float) -> int:
    """Sign with ``sign(0) = +1``."""
    return -1 if x < 0 else 1


class CompactArrays(NamedTuple):
    """Dense/CSR view of an instance over its surviving vertices.

    Index ``i`` refers to ``labels[i]``; edges satisfy ``eu[e] < ev[e]``.
    """

    labels: np.ndarray  # (m,) int64, sorted
    W: np.ndarray  # (m, m) symmetric couplings, zero diagonal
    h: np.ndarray  # (m,)
    eu: np.ndarray  # (E,)
    ev: np.ndarray  # (E,)
    ew: np.ndarray  # (E,)
    ptr: np.ndarray  # (m + 1,) CSR row pointers
    nbr: np.ndarray  # (2E,) neighbour indices
    nbr_w: np.ndarray  # (2E,) coupling to that neighbour


@dataclass(frozen=True, eq=False)
class IsingInstance:
    """Cost ``offset + sum_u h_u x_u + sum_(u,v) J_uv x_u x_v`` to be maximized."""

    n_original: int
    weights: Mapping[Edge, float]
    fields: Mapping[int, float] = field(default_factory=dict)
    vertices: frozenset[int] | None = None
    offset: float = 0.0
    metadata: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        n = int(self.n_original)
        verts = frozenset(range(n)) if self.vertices is None else frozenset(int(v) for v in self.vertices)
        if any(v < 0 or v >= n for v in verts):
            raise MalformedInstance(f"vertex labels must lie in [0, {n})")
        weights: dict[Edge, float] = {}
        for (u, v), w in self.weights.items():
            if u == v:
                raise MalformedInstance(f"self-loop on vertex {u}")
            e = _pair(u, v)
            if e in weights:
                raise MalformedInstance(f"duplicate edge {e}")
            if e[0] not in verts or e[1] not in verts:
                raise MalformedInstance(f"edge {e} touches a vertex outside the instance")
            w = float(w)
            if w == 0.0:
                raise MalformedInstance(f"edge {e} has zero weight")
            if not np.isfinite(w):
                raise MalformedInstance(f"edge {e} has non-finite weight")
            weights[e] = w
        fields = {}
        for u, hu in self.fields.items():
            if int(u) not in verts:
                raise MalformedInstance(f"field on vertex {u} outside the instance")
            if float(hu) != 0.0:
                fields[int(u)] = float(hu)
        object.__setattr__(self, "n_original", n)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "weights", dict(sorted(weights.items())))
        object.__setattr__(self, "fields", dict(sorted(fields.items())))
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "metadata", dict(self.metadata))

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def edges(self) -> list[Edge]:
        return list(self.weights)

    @property
    def num_edges(self) -> int:
        return len(self.weights)

    @property
    def has_fields(self) -> bool:
        return bool(self.fields)

    def field_at(self, u: int) -> float:
        return self.fields.get(u, 0.0)

    def weight(self, u: int, v: int) -> float:
        return self.weights.get(_pair(u, v), 0.0)

    @cached_property
    def adjacency(self) -> dict[int, dict[int, float]]:
        adj: dict[int, dict[int, float]] = {v: {} for v in sorted(self.vertices)}
        for (u, v), w in self.weights.items():
            adj[u][v] = w
            adj[v][u] = w
        return adj

    @cached_property
    def arrays(self) -> CompactArrays:
        labels = np.array(sorted(self.vertices), dtype=np.int64)
        index = {int(lab): i for i, lab in enumerate(labels)}
        m = len(labels)
        W = np.zeros((m, m))
        h = np.zeros(m)
        for u, hu in self.fields.items():
            h[index[u]] = hu
        E = len(self.weights)
        eu = np.empty(E, dtype=np.int64)
        ev = np.empty(E, dtype=np.int64)
        ew = np.empty(E)
        for e, ((u, v), w) in enumerate(self.weights.items()):
            i, j = index[u], index[v]
            eu[e], ev[e], ew[e] = i, j, w
            W[i, j] = W[j, i] = w
        deg = np.count_nonzero(W, axis=1)
        ptr = np.zeros(m + 1, dtype=np.int64)
        np.cumsum(deg, out=ptr[1:])
        nbr = np.empty(ptr[-1], dtype=np.int64)
        nbr_w = np.empty(ptr[-1])
        for i in range(m):
            cols = np.flatnonzero(W[i])
            nbr[ptr[i]:ptr[i + 1]] = cols
            nbr_w[ptr[i]:ptr[i + 1]] = W[i, cols]
        for a in (labels, W, h, eu, ev, ew, ptr, nbr, nbr_w):
            a.setflags(write=False)
        return CompactArrays(labels, W, h, eu, ev, ew, ptr, nbr, nbr_w)

    def key(self) -> tuple:
        """Hashable fingerprint of the full instance content."""
        return (
            self.n_original,
            tuple(sorted(self.vertices)),
            tuple((u, v, w) for (u, v), w in self.weights.items()),
            tuple(self.fields.items()),
            self.offset,
        )

    def with_metadata(self, **meta) -> "IsingInstance":
        return IsingInstance(self.n_original, self.weights, self.fields, self.vertices,
                             self.offset, {**self.metadata, **meta})

    def __repr__(self):
        return (f"IsingInstance(n={self.n}/{self.n_original}, edges={self.num_edges}, "
                f"fields={len(self.fields)}, offset={self.offset:g})")


@dataclass(frozen=True)
class ContractionRecord:
    eliminated: int
    anchor: int
    sign: int

    def __post_init__(self):
        if self.eliminated == self.anchor:
            raise CorruptMap("a vertex cannot be anchored to itself")
        if self.sign not in (-1, 1):
            raise CorruptMap(f"sign must be +-1, got {self.sign}")


@dataclass(frozen=True)
class ReconstructionMap:
    """Contraction records in elimination order; applied back to front."""

    n_original: int
    records: tuple[ContractionRecord, ...] = ()

    def __post_init__(self):
        seen = set()
        for rec in self.records:
            if rec.eliminated in seen:
                raise CorruptMap(f"vertex {rec.eliminated} eliminated twice")
            seen.add(rec.eliminated)

    def then(self, record: ContractionRecord) -> "ReconstructionMap":
        return ReconstructionMap(self.n_original, self.records + (record,))

    def __len__(self):
        return len(self.records)


def energy(instance: IsingInstance, x) -> float:
    """Cost of assignment ``x`` (mapping label -> +-1, or array indexed by label)."""
    if isinstance(x, Mapping):
        missing = [v for v in instance.vertices if v not in x]
        if missing:
            raise InvalidAssignment(f"no value for vertices {sorted(missing)[:5]}")
        get = x.__getitem__
    else:
        arr = np.asarray(x)
        if arr.ndim != 1 or arr.shape[0] < instance.n_original:
            raise InvalidAssignment("assignment array must cover all original labels")
        get = arr.__getitem__
    total = instance.offset
    for u, hu in instance.fields.items():
        total += hu * get(u)
    for (u, v), w in instance.weights.items():
        total += w * get(u) * get(v)
    return float(total)


def contract(instance: IsingInstance, edge: Edge, sign: int) -> tuple[IsingInstance, ContractionRecord]:
    """Impose ``x_v = sign * x_u`` on edge ``(u, v)`` and eliminate ``v``."""
    u, v = int(edge[0]), int(edge[1])
    w_uv = instance.weights.get(_pair(u, v))
    if w_uv is None:
        raise InvalidAction(f"({u}, {v}) is not an edge of the instance")
    if sign not in (-1, 1):
        raise InvalidAction(f"sign must be +-1, got {sign}")

    weights = dict(instance.weights)
    offset = instance.offset + sign * w_uv
    for w, j_vw in instance.adjacency[v].items():
        del weights[_pair(v, w)]
        if w == u:
            continue
        e = _pair(u, w)
        merged = weights.get(e, 0.0) + sign * j_vw
        if merged == 0.0:
            weights.pop(e, None)
        else:
            weights[e] = merged

    fields = dict(instance.fields)
    h_v = fields.pop(v, 0.0)
    if h_v:
        fields[u] = fields.get(u, 0.0) + sign * h_v

    contracted = IsingInstance(
        instance.n_original, weights, fields, instance.vertices - {v}, offset, instance.metadata
    )
    return contracted, ContractionRecord(eliminated=v, anchor=u, sign=sign)


def reconstruct(rmap: ReconstructionMap, x_final) -> np.ndarray:
    """Lift an assignment of the surviving vertices to all original labels.

    Returns an ``int8`` array of length ``n_original``.
    """
    x = np.zeros(rmap.n_original, dtype=np.int8)
    if isinstance(x_final, Mapping):
        for lab, val in x_final.items():
            x[int(lab)] = 1 if val > 0 else -1
    else:
        arr = np.asarray(x_final)
        mask = arr != 0
        x[mask] = np.where(arr[mask] > 0, 1, -1)
    for rec in reversed(rmap.records):
        if x[rec.anchor] == 0:
            raise CorruptMap(f"anchor {rec.anchor} of vertex {rec.eliminated} is unassigned")
        x[rec.eliminated] = rec.sign * x[rec.anchor]
    return x


def lift(rmap: ReconstructionMap, x_final, survivors: Iterable[int]) -> np.ndarray:
    """``reconstruct`` that also checks every survivor is assigned."""
    x = reconstruct(rmap, x_final)
    missing = [v for v in survivors if x[v] == 0]
    if missing:
        raise InvalidAssignment(f"survivors {missing[:5]} have no value")
    return x


# -- serialization -----------------------------------------------------------

def to_dict(instance: IsingInstance) -> dict:
    doc: dict = {
        "n": instance.n_original,
        "edges": [[u, v, w] for (u, v), w in instance.weights.items()],
    }
    if instance.fields:
        doc["fields"] = [[u, h] for u, h in instance.fields.items()]
    if instance.n != instance.n_original:
        doc["vertices"] = sorted(instance.vertices)
    if instance.offset != 0.0:
        doc["offset"] = instance.offset
    meta = dict(instance.metadata)
    meta.setdefault("weight_model", None)
    meta.setdefault("seed", None)
    doc["metadata"] = meta
    return doc


def from_dict(doc: Mapping) -> IsingInstance:
    try:
        n = int(doc["n"])
        weights = {}
        for item in doc["edges"]:
            u, v, w = item
            e = _pair(int(u), int(v))
            if e in weights:
                raise MalformedInstance(f"duplicate edge {e}")
            weights[e] = float(w)
        fields = {int(u): float(h) for u, h in doc.get("fields", [])}
        vertices = doc.get("vertices")
        return IsingInstance(
            n, weights, fields,
            None if vertices is None else frozenset(int(v) for v in vertices),
            float(doc.get("offset", 0.0)),
            dict(doc.get("metadata") or {}),
        )
    except MalformedInstance:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInstance(f"bad instance document: {exc}") from exc


def dumps(instance: IsingInstance) -> str:
    return json.dumps(to_dict(instance), indent=1)


def loads(text: str) -> IsingInstance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedInstance(f"instance file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedInstance("instance document must be an object")
    return from_dict(doc)


def save(instance: IsingInstance, path) -> Path:
    path = Path(path)
    path.write_text(dumps(instance) + "\n")
    return path


def load(path) -> IsingInstance:
    return loads(Path(path).read_text())
