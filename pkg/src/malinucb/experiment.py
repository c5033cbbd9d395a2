"""Monte-Carlo repetitions, parameter sweeps and the regret envelope check."""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bandit import ProblemConstants, beta
from .config import ConfigError, ExperimentConfig
from .engine import run
from .topology import Topology

log = logging.getLogger(__name__)


@dataclass
class RepOutcome:
    """What a worker sends back for one repetition."""

    seed: int
    trajectory: np.ndarray
    episode_end: np.ndarray
    total_rounds_used: int
    coverage_ok: bool
    param_bound: float
    opt_value: float
    episodes: list[dict] | None = None


@dataclass
class AggregateResult:
    config: ExperimentConfig
    lambda2: float
    spectral_gap: float
    x: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    seeds: np.ndarray
    final_regrets: np.ndarray
    param_bounds: np.ndarray
    coverage: np.ndarray
    n_episodes: np.ndarray
    trajectories: np.ndarray | None = field(default=None, repr=False)

    @property
    def config_id(self) -> str:
        return self.config.config_id

    @property
    def topology(self) -> str:
        return self.config.topology

    @property
    def n_agents(self) -> int:
        return self.config.n_agents

    @property
    def mean_final_regret(self) -> float:
        return float(self.mean[-1]) if len(self.mean) else 0.0


def _run_rep(args) -> RepOutcome:
    config, seed, topology, keep_log, trace = args
    res = run(config, seed=seed, topology=topology, record_episodes=keep_log, trace_consensus=trace)
    return RepOutcome(
        seed=seed,
        trajectory=res.cumulative_regret,
        episode_end=res.episode_end_regret,
        total_rounds_used=res.total_rounds_used,
        coverage_ok=res.coverage_ok,
        param_bound=res.param_bound,
        opt_value=res.opt_value,
        episodes=[r.to_dict() for r in res.episodes] if keep_log else None,
    )


def _forward_fill(rows: list[np.ndarray], length: int) -> np.ndarray:
    out = np.zeros((len(rows), length))
    for i, r in enumerate(rows):
        n = len(r)
        out[i, :n] = r
        if n < length:
            out[i, n:] = r[-1] if n else 0.0
    return out


def aggregate(config: ExperimentConfig, topology: Topology, outcomes: list[RepOutcome],
              keep_trajectories: bool = False) -> AggregateResult:
    """Mean and standard error per round (or per episode); order of ``outcomes`` is irrelevant."""
    outcomes = sorted(outcomes, key=lambda o: o.seed)
    if config.x_axis == "episodes":
        rows = [o.episode_end for o in outcomes]
        length = max(len(r) for r in rows)
    else:
        rows = [o.trajectory for o in outcomes]
        length = config.horizon
    traj = _forward_fill(rows, length)
    reps = len(outcomes)
    mean = traj.mean(axis=0)
    stderr = traj.std(axis=0, ddof=1) / math.sqrt(reps) if reps > 1 else np.zeros(length)
    return AggregateResult(
        config=config,
        lambda2=topology.lambda2,
        spectral_gap=topology.spectral_gap,
        x=np.arange(1, length + 1),
        mean=mean,
        stderr=stderr,
        seeds=np.array([o.seed for o in outcomes]),
        final_regrets=traj[:, -1].copy() if length else np.zeros(reps),
        param_bounds=np.array([o.param_bound for o in outcomes]),
        coverage=np.array([o.coverage_ok for o in outcomes]),
        n_episodes=np.array([len(o.episode_end) for o in outcomes]),
        trajectories=traj if keep_trajectories else None,
    )


def run_experiment(config: ExperimentConfig, jobs: int = 1, keep_trajectories: bool = False,
                   log_episodes: str | Path | None = None, trace_consensus: bool = False) -> AggregateResult:
    """Run ``config.repetitions`` seeded repetitions (seeds base_seed + rep) and aggregate."""
    topology = config.build_topology()  # fails before any run starts
    config.build_action_set()
    keep_log = log_episodes is not None
    tasks = [(config, config.seed + rep, topology, keep_log, trace_consensus)
             for rep in range(config.repetitions)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_rep, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        outcomes = [_run_rep(t) for t in tasks]

    if keep_log:
        write_episode_log(outcomes, log_episodes, config)
    return aggregate(config, topology, outcomes, keep_trajectories)


def write_episode_log(outcomes: list[RepOutcome], path: str | Path, config: ExperimentConfig) -> None:
    try:
        with open(path, "a") as fh:
            for o in sorted(outcomes, key=lambda o: o.seed):
                for rec in o.episodes or []:
                    fh.write(json.dumps({"config_id": config.config_id, "run": o.seed, **rec}) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write episode log {path}: {exc.strerror}") from exc


class SweepResults(list):
    """List of AggregateResult, plus ``failures``: (value, error message) per failed variant."""

    def __init__(self, results=(), failures=()):
        super().__init__(results)
        self.failures = list(failures)


def sweep(base: ExperimentConfig, axis: str, values: list, jobs: int = 1,
          keep_trajectories: bool = False) -> SweepResults:
    """Re-run ``base`` with one knob varied; all variants share the base seed."""
    if not values:
        raise ConfigError("sweep needs at least one value")
    if axis not in ("topology", "network_size", "network-size"):
        raise ConfigError(f"unknown sweep axis {axis!r}")
    out = SweepResults()
    for value in values:
        try:
            if axis == "topology":
                variant = base.replace(topology=str(value))
            else:
                variant = base.replace(n_agents=int(value))
            out.append(run_experiment(variant, jobs=jobs, keep_trajectories=keep_trajectories))
        except (ConfigError, ValueError) as exc:
            log.warning("sweep variant %s=%s failed: %s", axis, value, exc)
            out.failures.append((value, str(exc)))
    return out


def theorem2_bound(T: int, N: int, d: int, L: float, lam: float, R: float, S: float,
                   delta: float, lambda2: float) -> float:
    """High-probability regret bound after T rounds.

    Uses T' = T / (1 + q1) with the unrounded q1 = log(2N)/sqrt(2 log(1/l2));
    when l2 = 0 the communication terms vanish and q1 = 1.
    """
    if lambda2 < 1e-12:
        q1, comm = 1.0, 0.0
    else:
        rate = math.sqrt(2.0 * math.log(1.0 / lambda2))
        q1 = math.log(2.0 * N) / rate
        comm = math.log(2.0 * N * T) / rate
    t_eff = T / (1.0 + q1)
    consts = ProblemConstants(R=R, S=S, L=L, d=d, N=N, lam=lam, delta=delta)
    b = beta(consts, T)
    return 4.0 * b * math.sqrt(2.0 * t_eff * d * math.log(1.0 + t_eff * L ** 2 / (d * lam))) * (1.0 + comm) + comm


@dataclass
class EnvelopeReport:
    rounds: np.ndarray
    bound: np.ndarray
    rep_bounds: np.ndarray
    final_regrets: np.ndarray
    violation_fraction: float
    delta: float

    @property
    def ok(self) -> bool:
        return self.violation_fraction <= self.delta


def theorem2_envelope(config: ExperimentConfig, agg: AggregateResult) -> EnvelopeReport:
    """Evaluate the regret bound per round and count repetitions that exceed it at T.

    Each repetition is checked against the bound with its own S; the per-round
    curve uses the largest S across repetitions.
    """
    actions = config.build_action_set()
    L = actions.L
    lam = config.resolved_ridge(L)
    delta = config.resolved_delta
    S_values = agg.param_bounds if config.param_bound is None else np.full(len(agg.final_regrets), config.param_bound)

    def bound(T, S):
        return theorem2_bound(T, config.n_agents, config.dim, L, lam, config.noise_scale, S, delta, agg.lambda2)

    rounds = np.arange(1, config.horizon + 1)
    s_curve = float(np.max(S_values))
    curve = np.array([bound(int(t), s_curve) for t in rounds])
    rep_bounds = np.array([bound(config.horizon, float(S)) for S in S_values])
    violations = float(np.mean(agg.final_regrets > rep_bounds))
    return EnvelopeReport(rounds=rounds, bound=curve, rep_bounds=rep_bounds,
                          final_regrets=agg.final_regrets, violation_fraction=violations, delta=delta)


def bootstrap_prob_less(a: np.ndarray, b: np.ndarray, n_boot: int = 2000, seed: int = 0) -> float:
    """Fraction of bootstrap resamples in which mean(a) < mean(b)."""
    rng = np.random.default_rng(seed)
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    ma = a[rng.integers(len(a), size=(n_boot, len(a)))].mean(axis=1)
    mb = b[rng.integers(len(b), size=(n_boot, len(b)))].mean(axis=1)
    return float(np.mean(ma < mb))
