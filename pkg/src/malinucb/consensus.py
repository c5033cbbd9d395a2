"""Chebyshev-accelerated gossip averaging and the communication schedule.

After ``h`` rounds every agent holds entry ``i`` of ``T_h(W/l2) r / T_h(1/l2)``,
where ``T_h`` is the Chebyshev polynomial of the first kind and ``l2`` the
second eigenvalue magnitude of W. Each round is a single multiplication by W,
so agents only ever touch their 1-hop neighbours' values.

The normalised iterate is propagated directly (instead of the raw Chebyshev
iterate and its normaliser ``T_h(1/l2)``, which grows geometrically and
overflows for small ``l2``), using the ratio ``a_{h-1}/a_h`` of successive
normalisers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .topology import Topology, symmetric_eig

EXACT_LAMBDA2 = 1e-12
MAX_ROUNDS = 500


@dataclass(frozen=True)
class MixState:
    y_curr: np.ndarray
    y_prev: np.ndarray
    ratio: float  # a_{h-1} / a_h
    step: int
    lambda2: float


def _check_lambda2(lambda2: float) -> None:
    if not 0.0 <= lambda2 < 1.0:
        raise ValueError("disconnected or periodic structure matrix")


def _rounds(numerator: float, lambda2: float) -> int:
    _check_lambda2(lambda2)
    if lambda2 < EXACT_LAMBDA2:
        return 1
    q = math.ceil(numerator / math.sqrt(2.0 * math.log(1.0 / lambda2)))
    return int(min(max(q, 1), MAX_ROUNDS))


def comm_length(s: int, n: int, lambda2: float) -> int:
    """Communication rounds for episode ``s``: ceil(log(2ns) / sqrt(2 log(1/l2)))."""
    if s < 1 or n < 1:
        raise ValueError("episode index and agent count must be >= 1")
    return _rounds(math.log(2.0 * n * s), lambda2)


def comm_length_eps(epsilon: float, n: int, lambda2: float) -> int:
    """Rounds needed for accuracy ``epsilon``: ceil(log(2n/eps) / sqrt(2 log(1/l2))).

    ``comm_length(s, ...)`` is this schedule evaluated at ``epsilon = 1/s``.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return _rounds(math.log(2.0 * n / epsilon), lambda2)


def start_mix(values: np.ndarray, lambda2: float) -> MixState:
    values = np.asarray(values, dtype=float)
    return MixState(y_curr=values, y_prev=values, ratio=0.0, step=0, lambda2=lambda2)


def mix_round(state: MixState, W: np.ndarray) -> MixState:
    """One synchronous gossip round of the rescaled Chebyshev recurrence."""
    lam = state.lambda2
    Wy = W @ state.y_curr
    if lam < EXACT_LAMBDA2 or state.step == 0:
        # T_1(W/l2)/T_1(1/l2) = W; with l2 = 0 a single product is already exact
        return MixState(y_curr=Wy, y_prev=state.y_curr, ratio=lam, step=state.step + 1, lambda2=lam)
    ratio = 1.0 / (2.0 / lam - state.ratio)
    y_next = ratio * ((2.0 / lam) * Wy - state.ratio * state.y_prev)
    return MixState(y_curr=y_next, y_prev=state.y_curr, ratio=ratio, step=state.step + 1, lambda2=lam)


def consensus_average(values: np.ndarray, topology: Topology, q: int, trace: bool = False):
    """Run ``q`` mixing rounds on ``values`` (a vector, or one column per signal).

    With ``trace`` set, also returns the list of per-round agent outputs.
    """
    if q < 1:
        raise ValueError("need at least one communication round")
    state = start_mix(values, topology.lambda2)
    history = []
    for _ in range(q):
        state = mix_round(state, topology.W)
        if trace:
            history.append(state.y_curr)
    if trace:
        return state.y_curr, history
    return state.y_curr


def consensus_matrix(topology: Topology, q: int) -> np.ndarray:
    """The polynomial filter applied by ``q`` rounds, as an explicit n x n matrix."""
    P = consensus_average(np.eye(topology.n), topology, q)
    return 0.5 * (P + P.T)


def lemma1_matrix_bound(topology: Topology, epsilon: float) -> tuple[int, float]:
    """Return ``(q(eps), ||P_q - J/N||_2)`` for the accuracy-driven round count."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if topology.lambda2 < EXACT_LAMBDA2:
        return 1, 0.0
    n = topology.n
    q = comm_length_eps(epsilon, n, topology.lambda2)
    D = consensus_matrix(topology, q) - np.full((n, n), 1.0 / n)
    return q, float(np.max(np.abs(symmetric_eig(D))))
