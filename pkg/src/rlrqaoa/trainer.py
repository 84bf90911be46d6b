"""REINFORCE with Adam over the recursive elimination process."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidBatch
from .graph import IsingInstance, ReconstructionMap, contract, energy, reconstruct
from .policies import POLICY_KINDS, PolicyParams, PolicyStep
from .rqaoa import RqaoaConfig, RunResult, _solve_remainder, approximation_ratio, run_rqaoa

ANGLE_INITS = ("energy_optimal", "random")
CURVE_COLUMNS = ("episode", "energy", "best_so_far", "ratio")
NORM_COLUMNS = ("update", "episodes_seen", "angle_norm", "beta_norm")


@dataclass(frozen=True)
class TrainerConfig:
    batch_size: int = 10
    total_episodes: int = 1400
    discount: float = 0.99
    lr_angles: float = 0.001
    lr_betas: float = 0.5
    beta_init: float = 25.0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    angle_init: str = "energy_optimal"
    beta_mode: str = "one-all"
    baseline: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.total_episodes < 0:
            raise ValueError("total_episodes must be >= 0")
        if not 0.0 <= self.discount <= 1.0:
            raise ValueError("discount must lie in [0, 1]")
        if self.lr_angles <= 0 or self.lr_betas <= 0:
            raise ValueError("learning rates must be positive")
        if self.angle_init not in ANGLE_INITS:
            raise ValueError(f"angle_init must be one of {ANGLE_INITS}")


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=tuple(key)))


# -- episodes ------------------------------------------------------------------------

@dataclass
class EpisodeTrace:
    horizon: int
    steps: list = field(default_factory=list)   # (iteration, action, grad log pi)
    terminal_reward: float = 0.0
    returns: np.ndarray = field(default_factory=lambda: np.zeros(0))
    assignment: np.ndarray | None = None
    energy: float = 0.0
    trajectory: list = field(default_factory=list)  # (edge, sign, |M|)

    @property
    def rewards(self) -> np.ndarray:
        """Per-step rewards: zero except the last step, which carries the energy."""
        r = np.zeros(len(self.steps))
        if len(r):
            r[-1] = self.terminal_reward
        return r


def run_episode(instance: IsingInstance, policy: str, params: PolicyParams, n_c: int,
                rng: np.random.Generator, discount: float | None = None,
                angles_for=None) -> EpisodeTrace:
    """Sample one elimination sequence and score it.

    If every edge has cancelled before ``n_c`` is reached, the remaining steps
    have no action; the episode ends there and the survivors follow their fields.
    ``angles_for(state)``, if given, supplies the angles at each state in place of
    the stored per-iteration pair.
    """
    if policy not in POLICY_KINDS or policy != params.kind:
        raise ValueError(f"policy {policy!r} does not match parameters of kind {params.kind!r}")
    horizon = instance.n - n_c
    if horizon < 0:
        raise ValueError(f"instance has {instance.n} spins, fewer than n_c={n_c}")
    if params.horizon < horizon:
        raise ValueError(f"parameters cover {params.horizon} iterations, episode needs {horizon}")
    trace = EpisodeTrace(horizon)
    current = instance
    rmap = ReconstructionMap(instance.n_original)
    for i in range(horizon):
        if current.num_edges == 0:
            break
        step = PolicyStep(current, params, i, None if angles_for is None else angles_for(current))
        k = step.dist.sample(rng)
        dist = step.dist
        if policy == "rlrqaoa":
            edge, sign = dist.support[k], int(dist.signs[k])
            mag = abs(float(step._M[k]))
            action = edge
        else:
            (edge, sign), mag = dist.support[k], 1.0
            action = (edge, sign)
        trace.steps.append((i, action, step.grad_log_prob(k)))
        trace.trajectory.append((edge, sign, mag))
        current, record = contract(current, edge, sign)
        rmap = rmap.then(record)
    x = reconstruct(rmap, _solve_remainder(current))
    trace.assignment = x
    trace.energy = trace.terminal_reward = energy(instance, x)
    if discount is not None:
        trace.returns = compute_returns(trace, discount)
    return trace


def compute_returns(trace: EpisodeTrace, discount: float) -> np.ndarray:
    """G_t = discount^(H - t) * R for the steps taken, t = 0 .. H-1."""
    t = np.arange(len(trace.steps))
    return trace.terminal_reward * np.power(float(discount), trace.horizon - t)


# -- optimizer -----------------------------------------------------------------------

class Adam:
    """Adam for gradient ascent with one learning rate per parameter group."""

    def __init__(self, params: PolicyParams, lr_angles: float, lr_betas: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = np.concatenate([
            np.full(arr.size, lr_angles if name in ("alphas", "gammas") else lr_betas)
            for name, arr in params.named_arrays()])
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = np.zeros(self.lr.size)
        self.v = np.zeros(self.lr.size)
        self.t = 0

    def step(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1 ** self.t)
        v_hat = self.v / (1 - self.beta2 ** self.t)
        return theta + self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def policy_gradient(params: PolicyParams, batch: list[EpisodeTrace], config: TrainerConfig) -> np.ndarray:
    """(1/N) sum_i sum_t grad log pi(a_t | s_t) G_{i,t}, flattened."""
    if not batch:
        raise InvalidBatch("cannot update from an empty batch")
    returns = []
    for tr in batch:
        G = tr.returns if len(tr.returns) == len(tr.steps) else compute_returns(tr, config.discount)
        returns.append(G)
    if config.baseline:
        # batch-mean baseline per step index
        width = max(len(G) for G in returns)
        sums, counts = np.zeros(width), np.zeros(width)
        for G in returns:
            sums[:len(G)] += G
            counts[:len(G)] += 1
        mean = np.divide(sums, counts, out=np.zeros(width), where=counts > 0)
        returns = [G - mean[:len(G)] for G in returns]
    total = np.zeros(params.flat().size)
    for tr, G in zip(batch, returns):
        for (_, _, grad), g in zip(tr.steps, G):
            if g != 0.0:
                total += g * grad.flat()
    return total / len(batch)


def reinforce_update(params: PolicyParams, batch: list[EpisodeTrace], config: TrainerConfig,
                     optimizer: Adam | None = None) -> PolicyParams:
    """Ascent step along the REINFORCE direction; ``optimizer`` state is advanced in place."""
    delta = policy_gradient(params, batch, config)
    if optimizer is None:
        optimizer = Adam(params, config.lr_angles, config.lr_betas,
                         config.adam_beta1, config.adam_beta2, config.adam_eps)
    out = params.copy()
    out.set_flat(optimizer.step(params.flat(), delta))
    return out


# -- training ------------------------------------------------------------------------

@dataclass
class CurvePoint:
    episode: int
    energy: float
    best_so_far: float
    ratio: float | None


@dataclass
class TrainingResult:
    curve: list[CurvePoint]
    best: RunResult | None
    params: PolicyParams
    norms: list[tuple[int, int, float, float]]

    def best_so_far(self) -> np.ndarray:
        return np.array([p.best_so_far for p in self.curve])

    def energies(self) -> np.ndarray:
        return np.array([p.energy for p in self.curve])


def initial_params(instance: IsingInstance, policy: str, tcfg: TrainerConfig, rcfg: RqaoaConfig,
                   run_index: int = 0) -> PolicyParams:
    horizon = instance.n - rcfg.n_c
    if policy == "rlrone":
        return PolicyParams.init("rlrone", instance.n_original, horizon, tcfg.beta_init,
                                 beta_mode=tcfg.beta_mode)
    if tcfg.angle_init == "random":
        rng = stream(tcfg.seed, run_index, 1)
        alphas = rng.uniform(0, 2 * math.pi, horizon)
        gammas = rng.uniform(0, 2 * math.pi, horizon)
    else:
        # angles met along one greedy run; iterations it never reached keep the last ones
        log = run_rqaoa(instance, rcfg, stream(tcfg.seed, run_index, 1)).angle_log
        alphas = np.zeros(horizon)
        gammas = np.zeros(horizon)
        for i in range(horizon):
            if log:
                a = log[min(i, len(log) - 1)]
                alphas[i], gammas[i] = a.alpha, a.gamma
    return PolicyParams.init("rlrqaoa", instance.n_original, horizon, tcfg.beta_init,
                             alphas, gammas, tcfg.beta_mode)


def train(instance: IsingInstance, policy: str, tcfg: TrainerConfig, rcfg: RqaoaConfig,
          exact_energy: float | None = None, run_index: int = 0,
          params: PolicyParams | None = None) -> TrainingResult:
    """Train one policy on one instance.

    Episode ``e`` of training run ``run_index`` samples from its own stream, so a
    run is reproducible from (seed, run_index) alone.
    """
    if params is None:
        params = initial_params(instance, policy, tcfg, rcfg, run_index)
    opt = Adam(params, tcfg.lr_angles, tcfg.lr_betas, tcfg.adam_beta1, tcfg.adam_beta2, tcfg.adam_eps)
    curve: list[CurvePoint] = []
    norms = [(0, 0, params.angle_norm(), params.beta_norm())]
    best: RunResult | None = None
    best_val = -math.inf
    batch: list[EpisodeTrace] = []
    for e in range(tcfg.total_episodes):
        tr = run_episode(instance, policy, params, rcfg.n_c, stream(tcfg.seed, run_index, 0, e),
                         tcfg.discount)
        if tr.energy > best_val:
            best_val = tr.energy
            best = RunResult(assignment=tr.assignment, energy=tr.energy,
                             approx_ratio=approximation_ratio(tr.energy, exact_energy),
                             exact_energy=exact_energy, trajectory=list(tr.trajectory),
                             run_index=e)
        curve.append(CurvePoint(e, tr.energy, best_val, approximation_ratio(tr.energy, exact_energy)))
        batch.append(tr)
        if len(batch) == tcfg.batch_size or e == tcfg.total_episodes - 1:
            params = reinforce_update(params, batch, tcfg, opt)
            norms.append((len(norms), e + 1, params.angle_norm(), params.beta_norm()))
            batch = []
    return TrainingResult(curve, best, params, norms)


def vote_curve(best_so_far: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Per episode: the top best-so-far energy if more than half the runs share it, else NaN.

    ``best_so_far`` has shape (runs, episodes).
    """
    B = np.atleast_2d(np.asarray(best_so_far, dtype=float))
    top = B.max(axis=0)
    agree = np.sum(np.abs(B - top) <= tol, axis=0)
    return np.where(agree > B.shape[0] / 2, top, np.nan)


def write_curve_csv(path, result: TrainingResult) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CURVE_COLUMNS)
        for p in result.curve:
            w.writerow([p.episode, repr(p.energy), repr(p.best_so_far),
                        "" if p.ratio is None else repr(p.ratio)])
    return path


def write_norms_csv(path, result: TrainingResult) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(NORM_COLUMNS)
        for row in result.norms:
            w.writerow([row[0], row[1], repr(row[2]), repr(row[3])])
    return path
