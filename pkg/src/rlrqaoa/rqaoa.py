"""Recursive QAOA: eliminate the most correlated edge until ``n_c`` spins remain."""
from __future__ import annotations

import math
import time
from collections import OrderedDict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import InvalidBudget, NoAction, SizeLimit
from .graph import Edge, IsingInstance, ReconstructionMap, contract, energy, reconstruct, spin_sign
from .qaoa import DEFAULT_GRID, Angles, CorrelationVector, all_correlations, optimize_angles

EXACT_MAX_SPINS = 30


@dataclass(frozen=True)
class RqaoaConfig:
    n_c: int = 8
    tie_tolerance: float = 1e-8
    grid_n: int = DEFAULT_GRID
    seed: int = 0
    warm_start: bool = False

    def __post_init__(self):
        if self.n_c < 1:
            raise ValueError("n_c must be >= 1")
        if self.tie_tolerance < 0:
            raise ValueError("tie_tolerance must be >= 0")


@dataclass
class RunResult:
    assignment: np.ndarray
    energy: float
    approx_ratio: float | None = None
    exact_energy: float | None = None
    tie_counts: list[int] = field(default_factory=list)
    trajectory: list[tuple[Edge, int, float]] = field(default_factory=list)
    angle_log: list[Angles] = field(default_factory=list)
    run_index: int = 0
    runtime_ms: float = 0.0
    runs_used: int = 1

    @property
    def ties_total(self) -> int:
        return int(sum(self.tie_counts))

    @property
    def tie_fraction(self) -> float:
        """Fraction of iterations whose maximum was shared by at least two edges."""
        if not self.tie_counts:
            return 0.0
        return sum(1 for t in self.tie_counts if t > 0) / len(self.tie_counts)

    def to_record(self) -> dict:
        return {
            "run_index": self.run_index,
            "energy": self.energy,
            "exact_energy": self.exact_energy,
            "ratio": self.approx_ratio,
            "assignment": self.assignment.tolist(),
            "tie_counts": list(self.tie_counts),
            "trajectory": [[list(e), s, m] for e, s, m in self.trajectory],
            "angles": [[a.alpha, a.gamma] for a in self.angle_log],
        }


def run_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream ``index`` derived from a master seed."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def approximation_ratio(value: float, exact: float | None) -> float | None:
    if exact is None or not exact > 0:
        return None
    return value / exact


# -- greedy selection --------------------------------------------------------------

def greedy_tie_set(correlations: CorrelationVector, tie_tolerance: float = 1e-8) -> np.ndarray:
    """Indices of edges whose |M| is within ``tie_tolerance`` of the maximum."""
    if len(correlations) == 0:
        raise NoAction("no edges to choose from")
    mag = np.abs(correlations.values)
    return np.flatnonzero(mag >= mag.max() - tie_tolerance)


def select_edge_greedy(correlations: CorrelationVector, rng: np.random.Generator,
                       tie_tolerance: float = 1e-8) -> tuple[Edge, int]:
    """Max-|M| edge, ties broken uniformly at random; sign(0) = +1."""
    ties = greedy_tie_set(correlations, tie_tolerance)
    k = int(ties[0]) if len(ties) == 1 else int(ties[rng.integers(len(ties))])
    return correlations.edges[k], spin_sign(correlations.values[k])


# -- exact solver --------------------------------------------------------------------

class ExactResult(NamedTuple):
    assignment: dict[int, int]
    energy: float
    degeneracy: int


def brute_force_exact(instance: IsingInstance) -> ExactResult:
    """Exhaustive maximization over all spin states of the surviving vertices."""
    m = instance.n
    if m > EXACT_MAX_SPINS:
        raise SizeLimit(f"exhaustive search is capped at {EXACT_MAX_SPINS} spins (got {m})")
    A = instance.arrays
    scale = 1.0 + float(np.abs(A.ew).sum() + np.abs(A.h).sum())
    symmetric = not instance.has_fields
    _, bits, count = kernels.brute_force(A, instance.offset, symmetric, 1e-9 * scale)
    x = {int(lab): (-1 if (bits >> i) & 1 else 1) for i, lab in enumerate(A.labels)}
    return ExactResult(x, energy(instance, x), count)


def _solve_remainder(instance: IsingInstance) -> dict[int, int]:
    if instance.num_edges == 0:
        # isolated spins: follow the field, +1 when there is none
        return {v: spin_sign(instance.field_at(v)) for v in instance.vertices}
    return brute_force_exact(instance).assignment


# -- angle cache ---------------------------------------------------------------------

_ANGLE_CACHE: OrderedDict = OrderedDict()
_ANGLE_CACHE_SIZE = 1 << 14


def cached_optimize_angles(instance: IsingInstance, grid_n: int = DEFAULT_GRID) -> tuple[Angles, float]:
    """``optimize_angles`` memoized on the instance couplings (offset excluded)."""
    key = (grid_n,) + instance.key()[1:4]
    hit = _ANGLE_CACHE.get(key)
    if hit is not None:
        _ANGLE_CACHE.move_to_end(key)
        angles, shifted = hit
        return angles, shifted + instance.offset
    angles, value = optimize_angles(instance, grid_n)
    _ANGLE_CACHE[key] = (angles, value - instance.offset)
    if len(_ANGLE_CACHE) > _ANGLE_CACHE_SIZE:
        _ANGLE_CACHE.popitem(last=False)
    return angles, value


def clear_angle_cache():
    _ANGLE_CACHE.clear()


def _warm_angles(instance: IsingInstance, prev: Angles, grid_n: int) -> Angles:
    from scipy.optimize import minimize_scalar

    from .qaoa import _best_over_alpha

    width = 20 * math.pi / grid_n
    res = minimize_scalar(lambda g: -float(_best_over_alpha(instance, np.array([g]))[0][0]),
                          bounds=(prev.gamma - width, prev.gamma + width), method="bounded",
                          options={"xatol": 1e-6})
    _, alphas = _best_over_alpha(instance, np.array([res.x]))
    return Angles(float(alphas[0]), float(res.x))


# -- main loop -----------------------------------------------------------------------

def run_rqaoa(instance: IsingInstance, config: RqaoaConfig, rng: np.random.Generator | None = None,
              exact_energy: float | None = None, run_index: int = 0) -> RunResult:
    if instance.n < config.n_c:
        raise ValueError(f"instance has {instance.n} spins, fewer than n_c={config.n_c}")
    t0 = time.perf_counter()
    rng = run_rng(config.seed, run_index) if rng is None else rng
    current = instance
    rmap = ReconstructionMap(instance.n_original)
    ties: list[int] = []
    trajectory = []
    angle_log = []
    prev = None
    for _ in range(instance.n - config.n_c):
        if current.num_edges == 0:
            ties.append(0)
            continue
        if config.warm_start and prev is not None:
            angles = _warm_angles(current, prev, config.grid_n)
        else:
            angles, _ = cached_optimize_angles(current, config.grid_n)
        prev = angles
        corr = all_correlations(current, angles)
        tie_set = greedy_tie_set(corr, config.tie_tolerance)
        k = int(tie_set[0]) if len(tie_set) == 1 else int(tie_set[rng.integers(len(tie_set))])
        edge, sign = corr.edges[k], spin_sign(corr.values[k])
        current, record = contract(current, edge, sign)
        rmap = rmap.then(record)
        ties.append(len(tie_set) - 1)
        trajectory.append((edge, sign, abs(float(corr.values[k]))))
        angle_log.append(angles)

    x = reconstruct(rmap, _solve_remainder(current))
    value = energy(instance, x)
    return RunResult(
        assignment=x,
        energy=value,
        approx_ratio=approximation_ratio(value, exact_energy),
        exact_energy=exact_energy,
        tie_counts=ties,
        trajectory=trajectory,
        angle_log=angle_log,
        run_index=run_index,
        runtime_ms=1e3 * (time.perf_counter() - t0),
    )


def _run_indexed(args):
    instance, config, exact_energy, i = args
    return run_rqaoa(instance, config, None, exact_energy, i)


def run_many(instance: IsingInstance, config: RqaoaConfig, k: int, exact_energy: float | None = None,
             jobs: int = 1, start: int = 0) -> list[RunResult]:
    """Runs ``start .. start + k - 1``, each on its own derived random stream."""
    tasks = [(instance, config, exact_energy, i) for i in range(start, start + k)]
    if jobs <= 1 or k <= 1:
        return [_run_indexed(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_indexed, tasks, chunksize=max(1, k // (4 * jobs))))


def best_of_runs(instance: IsingInstance, config: RqaoaConfig, k: int,
                 exact_energy: float | None = None, jobs: int = 1,
                 stop_above: float | None = None, stop_if_deterministic: bool = False):
    """Best (first maximal) of up to ``k`` independent runs.

    ``stop_above`` ends the search once a run's energy exceeds that value;
    ``stop_if_deterministic`` ends it after a run that met no ties, since every
    further run would repeat it. The number of runs actually made is stored on
    the result as ``runs_used``.
    """
    if k < 1:
        raise InvalidBudget("need at least one run")
    if stop_above is None and not stop_if_deterministic:
        results = run_many(instance, config, k, exact_energy, jobs)
        best = max(results, key=lambda r: r.energy)
        best.runs_used = k
        return best
    best = None
    used = 0
    for i in range(k):
        res = run_rqaoa(instance, config, None, exact_energy, i)
        used += 1
        if best is None or res.energy > best.energy:
            best = res
        if stop_above is not None and res.energy > stop_above:
            break
        if stop_if_deterministic and res.ties_total == 0:
            break
    best.runs_used = used
    return best
