"""Softmax elimination policies and their score functions.

Two policies choose which edge to contract next:

* ``rlrqaoa``: logits ``beta_uv * |M_uv|`` with ``M`` the depth-1 correlations at
  per-iteration angles; the contraction sign is ``sign(M_uv)``.
* ``rlrone``: logits ``beta^b_uv`` over (edge, sign) pairs, no correlations.

Inverse temperatures are indexed by original vertex labels so a pair keeps its
parameter across contractions. ``beta_mode`` picks the layout:

    "one-all"  one beta per vertex pair                 (n, n), upper triangle used
    "all"      one beta per iteration                   (H,)
    "all-all"  one beta per vertex pair and iteration   (H, n, n)
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidAction, ParameterCoverage
from .graph import IsingInstance
from .qaoa import Angles, CorrelationVector, correlation_derivatives

BETA_MODES = ("one-all", "all", "all-all")
POLICY_KINDS = ("rlrqaoa", "rlrone")


def _beta_shape(mode: str, n: int, horizon: int):
    if mode == "one-all":
        return (n, n)
    if mode == "all":
        return (horizon,)
    if mode == "all-all":
        return (horizon, n, n)
    raise ValueError(f"unknown beta mode {mode!r}")


@dataclass
class PolicyParams:
    kind: str
    n: int
    horizon: int
    beta_mode: str = "one-all"
    alphas: np.ndarray | None = None
    gammas: np.ndarray | None = None
    betas: np.ndarray | None = None
    betas_plus: np.ndarray | None = None
    betas_minus: np.ndarray | None = None

    @classmethod
    def init(cls, kind: str, n: int, horizon: int, beta_init: float = 25.0,
             alphas=None, gammas=None, beta_mode: str = "one-all") -> "PolicyParams":
        if kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind {kind!r}")
        shape = _beta_shape(beta_mode, n, horizon)
        if kind == "rlrone":
            return cls(kind, n, horizon, beta_mode,
                       betas_plus=np.full(shape, float(beta_init)),
                       betas_minus=np.full(shape, float(beta_init)))
        alphas = np.zeros(horizon) if alphas is None else np.array(alphas, dtype=float)
        gammas = np.zeros(horizon) if gammas is None else np.array(gammas, dtype=float)
        if alphas.shape != (horizon,) or gammas.shape != (horizon,):
            raise ValueError("need one angle pair per iteration")
        return cls(kind, n, horizon, beta_mode, alphas, gammas, np.full(shape, float(beta_init)))

    def named_arrays(self) -> list[tuple[str, np.ndarray]]:
        names = ("alphas", "gammas", "betas") if self.kind == "rlrqaoa" else ("betas_plus", "betas_minus")
        return [(k, getattr(self, k)) for k in names]

    def copy(self) -> "PolicyParams":
        out = PolicyParams(self.kind, self.n, self.horizon, self.beta_mode)
        for name, arr in self.named_arrays():
            setattr(out, name, arr.copy())
        return out

    def zeros_like(self) -> "PolicyParams":
        out = PolicyParams(self.kind, self.n, self.horizon, self.beta_mode)
        for name, arr in self.named_arrays():
            setattr(out, name, np.zeros_like(arr))
        return out

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for _, a in self.named_arrays()])

    def set_flat(self, vec: np.ndarray) -> None:
        pos = 0
        for _, arr in self.named_arrays():
            arr.ravel()[:] = vec[pos:pos + arr.size]
            pos += arr.size

    def angle_norm(self) -> float:
        if self.kind != "rlrqaoa":
            return 0.0
        return float(np.sqrt(np.sum(self.alphas ** 2) + np.sum(self.gammas ** 2)))

    def beta_norm(self) -> float:
        arrays = [a for k, a in self.named_arrays() if k.startswith("betas")]
        if self.beta_mode == "one-all":
            iu = np.triu_indices(self.n, 1)
            return float(np.sqrt(sum(np.sum(a[iu] ** 2) for a in arrays)))
        if self.beta_mode == "all-all":
            iu = np.triu_indices(self.n, 1)
            return float(np.sqrt(sum(np.sum(a[:, iu[0], iu[1]] ** 2) for a in arrays)))
        return float(np.sqrt(sum(np.sum(a ** 2) for a in arrays)))

    # -- beta lookup / scatter ----------------------------------------------------

    def _lookup(self, B: np.ndarray, iteration: int, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        try:
            if self.beta_mode == "one-all":
                vals = B[u, v]
            elif self.beta_mode == "all":
                vals = np.full(u.shape, B[iteration])
            else:
                vals = B[iteration, u, v]
        except IndexError as exc:
            raise ParameterCoverage(f"no inverse temperature for some live pair: {exc}") from exc
        if not np.all(np.isfinite(vals)):
            raise ParameterCoverage("non-finite inverse temperature for a live pair")
        return vals

    def _scatter(self, B: np.ndarray, iteration: int, u, v, g) -> None:
        # per-pair layouts only; the shared "all" beta is handled by the caller
        if self.beta_mode == "one-all":
            np.add.at(B, (u, v), g)
        else:
            np.add.at(B, (iteration, u, v), g)

    # -- checkpoints --------------------------------------------------------------

    def to_dict(self) -> dict:
        doc: dict = {"kind": self.kind, "n": self.n, "horizon": self.horizon, "beta_mode": self.beta_mode}
        if self.kind == "rlrqaoa":
            doc["alphas"] = self.alphas.tolist()
            doc["gammas"] = self.gammas.tolist()
        for name, arr in self.named_arrays():
            if not name.startswith("betas"):
                continue
            if self.beta_mode == "one-all":
                iu = np.triu_indices(self.n, 1)
                doc[name] = [[int(u), int(v), float(arr[u, v])] for u, v in zip(*iu)]
            elif self.beta_mode == "all":
                doc[name] = arr.tolist()
            else:
                iu = np.triu_indices(self.n, 1)
                doc[name] = [[int(i), int(u), int(v), float(arr[i, u, v])]
                             for i in range(self.horizon) for u, v in zip(*iu)]
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "PolicyParams":
        kind, n, horizon, mode = doc["kind"], int(doc["n"]), int(doc["horizon"]), doc["beta_mode"]
        out = cls(kind, n, horizon, mode)
        if kind == "rlrqaoa":
            out.alphas = np.array(doc["alphas"], dtype=float)
            out.gammas = np.array(doc["gammas"], dtype=float)
            names = ["betas"]
        else:
            names = ["betas_plus", "betas_minus"]
        for name in names:
            arr = np.zeros(_beta_shape(mode, n, horizon))
            if mode == "all":
                arr[:] = doc[name]
            else:
                for row in doc[name]:
                    arr[tuple(int(i) for i in row[:-1])] = float(row[-1])
            setattr(out, name, arr)
        return out

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict()) + "\n")
        return path

    @classmethod
    def load(cls, path) -> "PolicyParams":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class ActionDistribution:
    """Softmax over ``support``; ``signs[i]`` is the contraction sign of action ``i``."""

    support: list
    probs: np.ndarray
    signs: np.ndarray
    logits: np.ndarray

    def sample(self, rng: np.random.Generator) -> int:
        # inverse-CDF draw keeps one uniform per step
        return int(min(np.searchsorted(np.cumsum(self.probs), rng.random(), side="right"),
                       len(self.probs) - 1))

    def index(self, action) -> int:
        try:
            return self.support.index(action)
        except ValueError:
            raise InvalidAction(f"{action!r} is not in the support") from None


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max()
    p = np.exp(z)
    return p / p.sum()


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max()
    return z - np.log(np.sum(np.exp(z)))


def _edge_labels(instance: IsingInstance):
    A = instance.arrays
    return A.labels[A.eu], A.labels[A.ev]


def _check_support(instance: IsingInstance):
    if instance.num_edges == 0:
        raise InvalidAction("instance has no edges to contract")


def _rlrqaoa_logits(instance, M, params: PolicyParams, iteration: int):
    u, v = _edge_labels(instance)
    beta = params._lookup(params.betas, iteration, u, v)
    return beta * np.abs(M), beta


def policy_rlrqaoa(instance: IsingInstance, correlations: CorrelationVector,
                   params: PolicyParams, iteration: int = 0) -> ActionDistribution:
    _check_support(instance)
    if correlations.edges != tuple(instance.edges):
        raise ValueError("correlations must be keyed by the instance's edges")
    M = correlations.values
    logits, _ = _rlrqaoa_logits(instance, M, params, iteration)
    signs = np.where(M < 0, -1, 1)
    return ActionDistribution(list(instance.edges), softmax(logits), signs, logits)


def policy_rlrone(instance: IsingInstance, params: PolicyParams, iteration: int = 0) -> ActionDistribution:
    _check_support(instance)
    u, v = _edge_labels(instance)
    bp = params._lookup(params.betas_plus, iteration, u, v)
    bm = params._lookup(params.betas_minus, iteration, u, v)
    logits = np.empty(2 * len(bp))
    logits[0::2] = bp
    logits[1::2] = bm
    support = [(e, s) for e in instance.edges for s in (1, -1)]
    signs = np.tile([1, -1], len(bp))
    return ActionDistribution(support, softmax(logits), signs, logits)


class PolicyStep:
    """Distribution at one state plus what is needed for its score function."""

    __slots__ = ("instance", "params", "iteration", "dist", "_M", "_dMa", "_dMg", "_beta")

    def __init__(self, instance: IsingInstance, params: PolicyParams, iteration: int,
                 angles: Angles | None = None):
        _check_support(instance)
        self.instance = instance
        self.params = params
        self.iteration = iteration
        if params.kind == "rlrqaoa":
            # an explicit ``angles`` overrides the stored pair (used for the greedy limit)
            if angles is None:
                angles = Angles(float(params.alphas[iteration]), float(params.gammas[iteration]))
            M, self._dMa, self._dMg = correlation_derivatives(instance, angles)
            logits, self._beta = _rlrqaoa_logits(instance, M, params, iteration)
            self._M = M
            self.dist = ActionDistribution(list(instance.edges), softmax(logits),
                                           np.where(M < 0, -1, 1), logits)
        else:
            self.dist = policy_rlrone(instance, params, iteration)

    def correlations(self) -> CorrelationVector:
        return CorrelationVector(self.instance.edges, self._M)

    def grad_log_prob(self, k: int) -> PolicyParams:
        """Gradient of log pi(action k) with the parameters' layout.

        Every component has the form sum_j (1[j = k] - pi_j) c_j, evaluated as
        sum_j pi_j (c_k - c_j) so nothing cancels when pi_k is close to 1.
        """
        p = self.params
        grad = p.zeros_like()
        u, v = _edge_labels(self.instance)
        probs = self.dist.probs
        score = -probs.copy()
        score[k] = probs[:k].sum() + probs[k + 1:].sum()
        shared = lambda c: float(probs @ (c[k] - c))
        i = self.iteration
        if p.kind == "rlrqaoa":
            absM = np.abs(self._M)
            if p.beta_mode == "all":
                grad.betas[i] = shared(absM)
            else:
                p._scatter(grad.betas, i, u, v, absM * score)
            # d|M|/dtheta = sign(M) dM/dtheta, with 0 at M = 0
            c = self._beta * np.sign(self._M)
            grad.alphas[i] = shared(c * self._dMa)
            grad.gammas[i] = shared(c * self._dMg)
        elif p.beta_mode == "all":
            plus = np.tile([1.0, 0.0], len(probs) // 2)
            grad.betas_plus[i] = shared(plus)
            grad.betas_minus[i] = shared(1.0 - plus)
        else:
            p._scatter(grad.betas_plus, i, u, v, score[0::2])
            p._scatter(grad.betas_minus, i, u, v, score[1::2])
        return grad


def grad_log_policy(instance: IsingInstance, correlations: CorrelationVector | None,
                    params: PolicyParams, iteration: int, action) -> PolicyParams:
    """Score function for ``action`` (an edge for rlrqaoa, ``(edge, sign)`` for rlrone).

    ``correlations`` is accepted for symmetry with the policy call; the
    derivative pass recomputes them at the parameters' angles.
    """
    step = PolicyStep(instance, params, iteration)
    return step.grad_log_prob(step.dist.index(action))


def log_prob(instance: IsingInstance, params: PolicyParams, iteration: int, action) -> float:
    """log pi(action) computed directly from the logits (for checks)."""
    step = PolicyStep(instance, params, iteration)
    return float(log_softmax(step.dist.logits)[step.dist.index(action)])
