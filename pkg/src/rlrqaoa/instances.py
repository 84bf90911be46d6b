"""Random regular ensembles, the cage catalog and hard-instance mining."""
from __future__ import annotations

import csv
import logging
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import graph as _graph
from .errors import Infeasible, NotAvailable
from .graph import Edge, IsingInstance
from .rqaoa import RqaoaConfig, best_of_runs, brute_force_exact, run_rqaoa

log = logging.getLogger(__name__)

WEIGHT_MODELS = ("gaussian", "bimodal")
INDEX_COLUMNS = ("instance_id", "n", "d", "weight_model", "exact_energy", "rqaoa_best", "ratio")


def derive_seed(seed: int, *key: int) -> int:
    """A 63-bit seed for sub-task ``key`` of a master seed."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(2, dtype=np.uint64)[0] >> np.uint64(1))


@dataclass(frozen=True)
class SimpleGraph:
    n: int
    edges: tuple[Edge, ...]

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def is_simple(self) -> bool:
        return all(u < v for u, v in self.edges) and len(set(self.edges)) == len(self.edges)

    def girth(self) -> float:
        """Length of the shortest cycle (inf for forests), by BFS from every vertex."""
        adj = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        best = float("inf")
        for s in range(self.n):
            dist = [-1] * self.n
            parent = [-1] * self.n
            dist[s] = 0
            q = deque([s])
            while q:
                x = q.popleft()
                for y in adj[x]:
                    if dist[y] < 0:
                        dist[y] = dist[x] + 1
                        parent[y] = x
                        q.append(y)
                    elif parent[x] != y:
                        best = min(best, dist[x] + dist[y] + 1)
        return best


# -- random regular graphs ----------------------------------------------------------

def gen_random_regular(n: int, d: int, rng: np.random.Generator, max_restarts: int = 1000) -> SimpleGraph:
    """Simple d-regular graph from the pairing model.

    Stubs are shuffled and paired; pairs that would form a loop or a repeated
    edge go back into the pool. When no valid pair is left the attempt restarts.
    """
    if d < 1 or d >= n or (n * d) % 2:
        raise Infeasible(f"no simple {d}-regular graph on {n} vertices")
    if d == n - 1:
        return SimpleGraph(n, tuple((u, v) for u in range(n) for v in range(u + 1, n)))
    for _ in range(max_restarts):
        edges: set[Edge] = set()
        stubs = np.repeat(np.arange(n), d)
        ok = True
        while len(stubs):
            rng.shuffle(stubs)
            rejected = []
            for a, b in zip(stubs[0::2].tolist(), stubs[1::2].tolist()):
                e = (a, b) if a < b else (b, a)
                if a != b and e not in edges:
                    edges.add(e)
                else:
                    rejected += [a, b]
            if len(rejected) == len(stubs):
                # nothing paired this round: give up unless some valid pair remains
                left = sorted(set(rejected))
                if not any(u < v and (u, v) not in edges for u in left for v in left):
                    ok = False
                    break
            stubs = np.array(rejected, dtype=int)
        if ok:
            return SimpleGraph(n, tuple(sorted(edges)))
    raise Infeasible(f"pairing failed {max_restarts} times for n={n}, d={d}")


def assign_weights(g: SimpleGraph, weight_model: str, rng: np.random.Generator,
                   **metadata) -> IsingInstance:
    """Independent per-edge weights; gaussian draws repeat until all weights differ."""
    m = len(g.edges)
    if weight_model == "bimodal":
        w = rng.choice(np.array([-1.0, 1.0]), size=m)
    elif weight_model == "gaussian":
        w = rng.standard_normal(m)
        while len(np.unique(w)) < m or np.any(w == 0.0):
            log.info("duplicate gaussian weight drawn; redrawing")
            w = rng.standard_normal(m)
    else:
        raise ValueError(f"weight_model must be one of {WEIGHT_MODELS}")
    meta = {"weight_model": weight_model}
    meta.update(metadata)
    return IsingInstance(g.n, dict(zip(g.edges, w.tolist())), metadata=meta)


# -- cage catalog --------------------------------------------------------------------

_CAGES: dict[tuple[int, int], tuple[str, int, tuple[Edge, ...]]] = {
    (3, 5): ("petersen", 10, (
        (0, 1), (0, 4), (0, 5), (1, 2), (1, 6), (2, 3), (2, 7), (3, 4), (3, 8), (4, 9),
        (5, 7), (5, 8), (6, 8), (6, 9), (7, 9))),
    (3, 6): ("heawood", 14, (
        (0, 1), (0, 5), (0, 13), (1, 2), (1, 10), (2, 3), (2, 7), (3, 4), (3, 12), (4, 5),
        (4, 9), (5, 6), (6, 7), (6, 11), (7, 8), (8, 9), (8, 13), (9, 10), (10, 11),
        (11, 12), (12, 13))),
    (3, 7): ("mcgee", 24, (
        (0, 1), (0, 12), (0, 23), (1, 2), (1, 8), (2, 3), (2, 19), (3, 4), (3, 15), (4, 5),
        (4, 11), (5, 6), (5, 22), (6, 7), (6, 18), (7, 8), (7, 14), (8, 9), (9, 10), (9, 21),
        (10, 11), (10, 17), (11, 12), (12, 13), (13, 14), (13, 20), (14, 15), (15, 16),
        (16, 17), (16, 23), (17, 18), (18, 19), (19, 20), (20, 21), (21, 22), (22, 23))),
    (3, 8): ("tutte-coxeter", 30, (
        (0, 1), (0, 17), (0, 29), (1, 2), (1, 22), (2, 3), (2, 9), (3, 4), (3, 26), (4, 5),
        (4, 13), (5, 6), (5, 18), (6, 7), (6, 23), (7, 8), (7, 28), (8, 9), (8, 15), (9, 10),
        (10, 11), (10, 19), (11, 12), (11, 24), (12, 13), (12, 29), (13, 14), (14, 15),
        (14, 21), (15, 16), (16, 17), (16, 25), (17, 18), (18, 19), (19, 20), (20, 21),
        (20, 27), (21, 22), (22, 23), (23, 24), (24, 25), (25, 26), (26, 27), (27, 28),
        (28, 29))),
}


def verify_cage(g: SimpleGraph, d: int, girth: int) -> SimpleGraph:
    if not g.is_simple():
        raise ValueError("cage edge list is not simple")
    if not np.all(g.degrees() == d):
        raise ValueError(f"cage is not {d}-regular")
    if g.girth() != girth:
        raise ValueError(f"cage girth is {g.girth()}, expected {girth}")
    return g


def cage(d: int, g: int) -> SimpleGraph:
    """The catalogued (d, g)-cage, verified for degree and girth."""
    try:
        _, n, edges = _CAGES[(d, g)]
    except KeyError:
        raise NotAvailable(
            f"({d},{g})-cage is not in the catalog {sorted(_CAGES)}; "
            "load its edge list from a file with `rlrqaoa generate --from-edges`") from None
    return verify_cage(SimpleGraph(n, edges), d, g)


def cage_instance(d: int, g: int, seed: int, weight_model: str = "bimodal") -> IsingInstance:
    rng = np.random.default_rng(seed)
    return assign_weights(cage(d, g), weight_model, rng, seed=seed, graph=f"cage-{d}-{g}")


def read_edge_list(path) -> SimpleGraph:
    """Whitespace-separated ``u v`` lines; labels are relabelled to 0..n-1 in sorted order."""
    pairs = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            u, v = line.split()[:2]
            pairs.append((int(u), int(v)))
    labels = sorted({x for p in pairs for x in p})
    idx = {lab: i for i, lab in enumerate(labels)}
    edges = sorted({tuple(sorted((idx[u], idx[v]))) for u, v in pairs})
    return SimpleGraph(len(labels), tuple(edges))


# -- ensembles ------------------------------------------------------------------------

@dataclass(frozen=True)
class EnsembleSpec:
    n_values: tuple[int, ...]
    d_values: tuple[int, ...]
    weight_model: str = "bimodal"
    count: int = 25
    seed: int = 0

    def __post_init__(self):
        if self.weight_model not in WEIGHT_MODELS:
            raise ValueError(f"weight_model must be one of {WEIGHT_MODELS}")
        if self.count < 0:
            raise ValueError("count must be >= 0")

    def cells(self) -> list[tuple[int, int]]:
        """(n, d) pairs that admit a simple d-regular graph, in scan order."""
        return [(n, d) for n in self.n_values for d in self.d_values if d < n and (n * d) % 2 == 0]


def instance_id(weight_model: str, n: int, d: int, j: int) -> str:
    return f"{weight_model}-n{n}-d{d}-{j:03d}"


def generate_ensemble(spec: EnsembleSpec):
    """Yield ``(instance_id, instance)`` for every replicate and cell, reproducibly.

    Replicates are the outer loop, so any prefix of the stream covers all cells evenly.
    """
    model_key = WEIGHT_MODELS.index(spec.weight_model)
    for j in range(spec.count):
        for n, d in spec.cells():
            seed = derive_seed(spec.seed, model_key, n, d, j)
            rng = np.random.default_rng(seed)
            g = gen_random_regular(n, d, rng)
            iid = instance_id(spec.weight_model, n, d, j)
            yield iid, assign_weights(g, spec.weight_model, rng, seed=seed, d=d, instance_id=iid)


# -- mining ----------------------------------------------------------------------------

@dataclass
class HardInstanceRecord:
    instance_id: str
    instance: IsingInstance
    exact_energy: float
    rqaoa_best_energy: float
    ratio: float
    runs_used: int

    @property
    def n(self) -> int:
        return self.instance.n

    @property
    def d(self) -> int:
        return int(self.instance.metadata.get("d", 0))

    def index_row(self) -> list:
        return [self.instance_id, self.n, self.d, self.instance.metadata.get("weight_model", ""),
                repr(self.exact_energy), repr(self.rqaoa_best_energy), repr(self.ratio)]


def evaluate_instance(iid: str, instance: IsingInstance, run_budget: int, threshold: float,
                      config: RqaoaConfig):
    """Return ``(status, record-or-None)``; status is 'nonpositive', 'easy' or 'hard'."""
    exact = brute_force_exact(instance).energy
    if not exact > 0:
        return "nonpositive", None
    cfg = replace(config, seed=int(instance.metadata.get("seed", config.seed)))
    if instance.metadata.get("weight_model") == "gaussian":
        res = run_rqaoa(instance, cfg, exact_energy=exact)
        res.runs_used = 1
    else:
        # once one run clears the threshold the instance cannot qualify
        res = best_of_runs(instance, cfg, run_budget, exact, stop_above=threshold * exact,
                           stop_if_deterministic=True)
    ratio = res.energy / exact
    if ratio <= threshold:
        return "hard", HardInstanceRecord(iid, instance, exact, res.energy, ratio, res.runs_used)
    return "easy", None


def _evaluate_task(args):
    return evaluate_instance(*args)


def mine_hard(spec: EnsembleSpec, run_budget: int = 1400, threshold: float = 0.95,
              config: RqaoaConfig | None = None, jobs: int = 1,
              max_records: int | None = None, limit: int | None = None,
              stats: dict | None = None) -> list[HardInstanceRecord]:
    """Scan the ensemble and keep instances whose best RQAOA ratio is at most ``threshold``.

    Instances with a non-positive optimum are skipped. ``limit`` caps the number
    of generated instances; ``max_records`` stops the scan once that many records
    are found. ``stats`` (if given) receives counts.
    """
    config = config or RqaoaConfig()
    counts = {"scanned": 0, "nonpositive": 0, "easy": 0, "hard": 0, "too_small": 0}
    records: list[HardInstanceRecord] = []
    tasks = []
    for k, (iid, inst) in enumerate(generate_ensemble(spec)):
        if limit is not None and k >= limit:
            break
        if inst.n < config.n_c:
            counts["too_small"] += 1
            continue
        tasks.append((iid, inst, run_budget, threshold, config))

    def consume(status, rec):
        counts["scanned"] += 1
        counts[status] += 1
        if status == "nonpositive":
            log.info("skipping instance with non-positive optimum")
        if rec is not None:
            records.append(rec)

    if jobs <= 1:
        for t in tasks:
            consume(*_evaluate_task(t))
            if max_records is not None and len(records) >= max_records:
                break
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for out in pool.map(_evaluate_task, tasks):
                consume(*out)
        if max_records is not None:
            records = records[:max_records]
    if stats is not None:
        stats.update(counts)
    return records


def save_records(records: list[HardInstanceRecord], outdir) -> Path:
    """One instance file per record plus ``index.csv``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    index = outdir / "index.csv"
    with index.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(INDEX_COLUMNS)
        for r in records:
            inst = r.instance.with_metadata(exact_energy=r.exact_energy, rqaoa_best=r.rqaoa_best_energy,
                                            ratio=r.ratio, runs_used=r.runs_used)
            _graph.save(inst, outdir / f"{r.instance_id}.json")
            w.writerow(r.index_row())
    return index
