"""Ridge estimates, confidence ellipsoids and optimistic action selection."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

REFRESH_EVERY = 256


@dataclass(frozen=True)
class ActionSet:
    """Either a finite list of actions (rows of ``actions``) or the box [-h, h]^d."""

    kind: str
    dim: int
    actions: np.ndarray | None = None
    half_width: float = 1.0

    def __post_init__(self):
        if self.kind == "finite":
            if self.actions is None or len(self.actions) == 0:
                raise ValueError("finite action set is empty")
            if self.actions.ndim != 2 or self.actions.shape[1] != self.dim:
                raise ValueError(f"actions must be a (K, {self.dim}) array")
        elif self.kind != "hypercube":
            raise ValueError(f"unknown action set kind {self.kind!r}")

    @classmethod
    def finite(cls, actions) -> "ActionSet":
        arr = np.atleast_2d(np.asarray(actions, dtype=float))
        return cls(kind="finite", dim=arr.shape[1], actions=arr)

    @classmethod
    def hypercube(cls, dim: int, half_width: float = 1.0) -> "ActionSet":
        return cls(kind="hypercube", dim=dim, half_width=half_width)

    @property
    def L(self) -> float:
        if self.kind == "hypercube":
            return math.sqrt(self.dim) * self.half_width
        return float(np.max(np.linalg.norm(self.actions, axis=1)))

    def best(self, theta: np.ndarray) -> tuple[np.ndarray, float]:
        """Exact maximiser of <x, theta> over the set; sign(0) counts as +1."""
        if self.kind == "hypercube":
            x = self.half_width * np.where(theta >= 0, 1.0, -1.0)
            return x, float(self.half_width * np.abs(theta).sum())
        values = self.actions @ theta
        i = int(np.argmax(values))
        return self.actions[i].copy(), float(values[i])

    def max_abs_value(self, theta: np.ndarray) -> float:
        if self.kind == "hypercube":
            return float(self.half_width * np.abs(theta).sum())
        return float(np.max(np.abs(self.actions @ theta)))


@dataclass(frozen=True)
class ProblemConstants:
    R: float
    S: float
    L: float
    d: int
    N: int
    lam: float
    delta: float

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.R < 0 or self.S <= 0 or self.L <= 0 or self.lam <= 0:
            raise ValueError("R must be >= 0 and S, L, lambda positive")
        if self.d < 1 or self.N < 1:
            raise ValueError("dimension and agent count must be >= 1")


def beta(consts: ProblemConstants, s: int) -> float:
    """Confidence radius after ``s`` incorporated episodes."""
    if not 0.0 < consts.delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {consts.delta}")
    if s < 0:
        raise ValueError("episode count must be >= 0")
    c = consts
    log_term = math.log((1.0 + s * c.L ** 2 / c.lam) / c.delta)
    return c.R / math.sqrt(c.N) * math.sqrt(c.d * log_term) + math.sqrt(c.lam) * c.S + c.L / math.sqrt(c.lam)


class RlsState:
    """Regularised least squares for ``n_agents`` response streams sharing one design.

    Every agent sees the same network action, so the design matrix V is common
    and only the response vectors b (one row per agent) differ.
    """

    def __init__(self, dim: int, lam: float, n_agents: int = 1):
        if lam <= 0:
            raise ValueError("ridge parameter must be positive")
        self.dim = dim
        self.lam = lam
        self.V = lam * np.eye(dim)
        self.V_inv = np.eye(dim) / lam
        self.b = np.zeros((n_agents, dim))
        self.s = 0

    def update(self, x: np.ndarray, y) -> "RlsState":
        """Add one episode: action ``x`` with consensus rewards ``y`` (scalar or per agent)."""
        x = np.asarray(x, dtype=float)
        self.V += np.outer(x, x)
        Vx = self.V_inv @ x
        self.V_inv -= np.outer(Vx, Vx) / (1.0 + x @ Vx)
        self.b += np.multiply.outer(np.atleast_1d(y), x)
        self.s += 1
        if self.s % REFRESH_EVERY == 0:
            self.V_inv = cho_solve(cho_factor(self.V), np.eye(self.dim))
            self.V_inv = 0.5 * (self.V_inv + self.V_inv.T)
        return self

    @property
    def estimates(self) -> np.ndarray:
        """RLS estimates, one row per agent."""
        return self.b @ self.V_inv

    def estimate(self, agent: int = 0) -> np.ndarray:
        return self.V_inv @ self.b[agent]

    def copy(self) -> "RlsState":
        new = RlsState.__new__(RlsState)
        new.dim, new.lam, new.s = self.dim, self.lam, self.s
        new.V, new.V_inv, new.b = self.V.copy(), self.V_inv.copy(), self.b.copy()
        return new


def rls_update(state: RlsState, x: np.ndarray, y) -> RlsState:
    return state.update(x, y)


@dataclass(frozen=True)
class ConfidenceRegion:
    center: np.ndarray
    V: np.ndarray
    beta: float
    delta: float
    V_inv: np.ndarray | None = None

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("confidence radius must be nonnegative")

    def inverse(self) -> np.ndarray:
        return self.V_inv if self.V_inv is not None else np.linalg.inv(self.V)

    def contains(self, v: np.ndarray) -> bool:
        diff = np.asarray(v, dtype=float) - self.center
        return bool(math.sqrt(max(diff @ self.V @ diff, 0.0)) <= self.beta + 1e-12)


def contains(region: ConfidenceRegion, v: np.ndarray) -> bool:
    return region.contains(v)


def inverse_sqrt(V: np.ndarray) -> np.ndarray:
    w, Q = np.linalg.eigh(V)
    return (Q / np.sqrt(w)) @ Q.T


def select_optimistic(region: ConfidenceRegion, actions: ActionSet) -> tuple[np.ndarray, float]:
    """Optimistic action and its upper confidence value.

    Finite sets use the closed-form inner maximum <x, mu> + beta ||x||_{V^-1}.
    For the hypercube the ellipsoid is relaxed to the l1 ball
    {theta : ||V^{1/2}(theta - mu)||_1 <= beta sqrt(d)}, which contains it;
    the best box vertex against each of the ball's 2d extreme points is
    sign(theta) with value ||theta||_1.
    """
    mu = region.center
    if actions.kind == "finite":
        A = actions.actions
        bonus = np.sqrt(np.maximum(np.einsum("kd,de,ke->k", A, region.inverse(), A), 0.0))
        scores = A @ mu + region.beta * bonus
        i = int(np.argmax(scores))
        return A[i].copy(), float(scores[i])

    d = actions.dim
    M = inverse_sqrt(region.V)
    step = region.beta * math.sqrt(d) * M  # column j is the j-th extreme direction
    candidates = np.concatenate([mu + step.T, mu - step.T])
    signs = np.where(candidates >= 0, 1.0, -1.0)
    values = actions.half_width * np.abs(candidates).sum(axis=1)
    best = values.max()
    tied = np.flatnonzero(values >= best - 1e-12 * max(1.0, abs(best)))
    if len(tied) > 1:
        # lexicographically smallest sign vector among the ties
        order = np.lexsort(signs[tied].T[::-1])
        i = int(tied[order[0]])
    else:
        i = int(tied[0])
    return actions.half_width * signs[i], float(values[i])
