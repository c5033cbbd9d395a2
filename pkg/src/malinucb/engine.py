"""Episode-level simulation of the multi-agent optimistic linear bandit.

Each episode is one action round followed by ``q(s)`` gossip rounds. A
coordinator picks one agent uniformly at random; that agent's optimistic
action is played by the whole network, every agent observes its own noisy
reward, the rewards are averaged by accelerated gossip, and each agent folds
its consensus value into its ridge estimate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bandit import ActionSet, ConfidenceRegion, ProblemConstants, RlsState, beta, select_optimistic
from .config import ExperimentConfig
from .consensus import comm_length, consensus_average
from .topology import Topology

STREAMS = ("ground_truth", "coordinator", "noise")


@dataclass(frozen=True)
class GroundTruth:
    theta: np.ndarray
    mu_star: np.ndarray
    x_star: np.ndarray
    opt_value: float

    @property
    def max_param_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.theta, axis=1)))


@dataclass
class EpisodeRecord:
    s: int
    t_start: int
    agent: int
    action: np.ndarray
    raw_rewards: np.ndarray
    consensus_rewards: np.ndarray | None
    q: int
    inst_regret_action: float
    inst_regret_comm: float
    ucb_value: float = float("nan")
    truncated: bool = False
    trace: list | None = None

    def to_dict(self) -> dict:
        out = {
            "s": self.s,
            "t_start": self.t_start,
            "agent": self.agent,
            "action": self.action.tolist(),
            "raw_rewards": self.raw_rewards.tolist(),
            "consensus_rewards": None if self.consensus_rewards is None else self.consensus_rewards.tolist(),
            "q": self.q,
            "inst_regret_action": self.inst_regret_action,
            "inst_regret_comm": self.inst_regret_comm,
            "ucb_value": self.ucb_value,
            "truncated": self.truncated,
        }
        if self.trace is not None:
            out["consensus_trace"] = [np.asarray(v).tolist() for v in self.trace]
        return out


@dataclass
class RunResult:
    cumulative_regret: np.ndarray
    episodes: list[EpisodeRecord]
    total_rounds_used: int
    seed: int
    episode_end_regret: np.ndarray
    q_values: np.ndarray
    coverage_ok: bool
    param_bound: float
    opt_value: float
    extras: dict = field(default_factory=dict)

    @property
    def final_regret(self) -> float:
        return float(self.cumulative_regret[-1]) if len(self.cumulative_regret) else 0.0

    @property
    def n_episodes(self) -> int:
        return len(self.q_values)


def make_streams(seed: int) -> dict[str, np.random.Generator]:
    """Independent generators per purpose, derived from one seed."""
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.default_rng(child) for name, child in zip(STREAMS, children)}


def sample_ground_truth(rng: np.random.Generator, N: int, d: int, action_set: ActionSet,
                        normalize: bool = True) -> GroundTruth:
    """Standard-normal agent parameters; optionally rescaled so |<x, mu*>| <= 1 on the action set."""
    theta = rng.standard_normal((N, d))
    if normalize:
        theta = theta / max(1.0, action_set.max_abs_value(theta.mean(axis=0)))
    mu = theta.mean(axis=0)
    x_star, opt = action_set.best(mu)
    return GroundTruth(theta=theta, mu_star=mu, x_star=x_star, opt_value=opt)


def sample_rewards(rng: np.random.Generator, theta: np.ndarray, action: np.ndarray, R: float,
                   noise: str = "gaussian") -> np.ndarray:
    mean = theta @ action
    if R == 0:
        return mean
    if noise == "gaussian":
        return mean + R * rng.standard_normal(len(mean))
    if noise == "uniform":
        # bounded in [-R, R], hence R-sub-Gaussian
        return mean + rng.uniform(-R, R, len(mean))
    raise ValueError(f"unknown noise kind {noise!r}")


class Simulation:
    """Mutable state of one run; call :meth:`run_episode` until it returns None."""

    def __init__(self, config: ExperimentConfig, seed: int | None = None,
                 topology: Topology | None = None, action_set: ActionSet | None = None,
                 record_episodes: bool = True, trace_consensus: bool = False):
        self.config = config
        self.seed = config.seed if seed is None else seed
        self.topology = topology if topology is not None else config.build_topology()
        if self.topology.n != config.n_agents:
            raise ValueError("topology size does not match n_agents")
        self.actions = action_set if action_set is not None else config.build_action_set()
        self.rngs = make_streams(self.seed)
        N, d = config.n_agents, config.dim
        self.truth = sample_ground_truth(self.rngs["ground_truth"], N, d, self.actions,
                                         config.normalize_ground_truth)
        L = self.actions.L
        S = config.param_bound if config.param_bound is not None else self.truth.max_param_norm
        self.consts = ProblemConstants(R=config.noise_scale, S=S, L=L, d=d, N=N,
                                       lam=config.resolved_ridge(L), delta=config.resolved_delta)
        self.rls = RlsState(d, self.consts.lam, n_agents=N)
        self.record_episodes = record_episodes
        self.trace_consensus = trace_consensus
        self.t = 1
        self.s = 1
        self.instant = np.zeros(config.horizon)
        self.episodes: list[EpisodeRecord] = []
        self.episode_end: list[float] = []
        self.q_values: list[int] = []
        self.total_regret = 0.0
        self.coverage_ok = self._covered()
        self.done = False

    def region(self, agent: int) -> ConfidenceRegion:
        return ConfidenceRegion(center=self.rls.estimate(agent), V=self.rls.V,
                                beta=beta(self.consts, self.rls.s), delta=self.consts.delta,
                                V_inv=self.rls.V_inv)

    def _covered(self) -> bool:
        diff = self.rls.estimates - self.truth.mu_star
        sq = ((diff @ self.rls.V) * diff).sum(axis=1)
        return bool(np.sqrt(max(sq.max(), 0.0)) <= beta(self.consts, self.rls.s) + 1e-12)

    def run_episode(self) -> EpisodeRecord | None:
        if self.done or self.t > self.config.horizon:
            self.done = True
            return None
        cfg, truth = self.config, self.truth
        T, N = cfg.horizon, cfg.n_agents
        t_s, s = self.t, self.s

        agent = int(self.rngs["coordinator"].integers(N))
        x, ucb = select_optimistic(self.region(agent), self.actions)
        rewards = sample_rewards(self.rngs["noise"], truth.theta, x, cfg.noise_scale, cfg.noise)
        gap = truth.opt_value - float(x @ truth.mu_star)
        self.instant[t_s - 1] = gap

        q = comm_length(s, N, self.topology.lambda2)
        if t_s + q > T:
            # not enough rounds left to communicate: the run ends after this action
            self.done = True
            self.t = t_s + 1
            record = EpisodeRecord(s=s, t_start=t_s, agent=agent, action=x, raw_rewards=rewards,
                                   consensus_rewards=None, q=0, inst_regret_action=gap,
                                   inst_regret_comm=0.0, ucb_value=ucb, truncated=True)
        else:
            per_round = truth.opt_value if cfg.regret_convention == "no-reward" else gap
            self.instant[t_s:t_s + q] = per_round
            if self.trace_consensus:
                y, trace = consensus_average(rewards, self.topology, q, trace=True)
            else:
                y, trace = consensus_average(rewards, self.topology, q), None
            self.rls.update(x, y)
            if self.coverage_ok:
                self.coverage_ok = self._covered()
            self.t = t_s + 1 + q
            self.s += 1
            record = EpisodeRecord(s=s, t_start=t_s, agent=agent, action=x, raw_rewards=rewards,
                                   consensus_rewards=y, q=q, inst_regret_action=gap,
                                   inst_regret_comm=q * per_round, ucb_value=ucb, trace=trace)
        self.q_values.append(record.q)
        self.total_regret += record.inst_regret_action + record.inst_regret_comm
        self.episode_end.append(self.total_regret)
        if self.record_episodes:
            self.episodes.append(record)
        return record

    def result(self) -> RunResult:
        used = self.t - 1
        return RunResult(
            cumulative_regret=np.cumsum(self.instant[:used]),
            episodes=self.episodes,
            total_rounds_used=used,
            seed=self.seed,
            episode_end_regret=np.asarray(self.episode_end),
            q_values=np.asarray(self.q_values, dtype=int),
            coverage_ok=self.coverage_ok,
            param_bound=self.consts.S,
            opt_value=self.truth.opt_value,
        )


def run(config: ExperimentConfig, seed: int | None = None, topology: Topology | None = None,
        record_episodes: bool = True, trace_consensus: bool = False) -> RunResult:
    """Play episodes until the round budget T is exhausted."""
    sim = Simulation(config, seed=seed, topology=topology, record_episodes=record_episodes,
                     trace_consensus=trace_consensus)
    while sim.run_episode() is not None:
        pass
    return sim.result()
