"""Experiment configuration and the flat ``key = value`` file format."""

from __future__ import annotations

import configparser
import dataclasses
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bandit import ActionSet
from .topology import Topology, TopologyError, make_topology

REGRET_CONVENTIONS = ("no-reward", "hold-last-action")
NOISE_KINDS = ("gaussian", "uniform")
X_AXES = ("rounds", "episodes")

# short keys accepted in config files and --set overrides
ALIASES = {
    "n": "n_agents",
    "t": "horizon",
    "d": "dim",
    "lambda": "ridge",
    "r": "noise_scale",
    "s": "param_bound",
    "reps": "repetitions",
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    n_agents: int = 4
    horizon: int = 10_000
    dim: int = 4
    topology: str = "complete"
    self_loops: bool = True
    ridge: float | None = None  # None -> max(1, L^2)
    delta: float | None = None  # None -> 1 / (4T)
    noise_scale: float = 0.1
    noise: str = "gaussian"
    param_bound: float | None = None  # None -> max_i ||theta_i|| of the sampled instance
    action_set: str = "hypercube"
    half_width: float = 1.0
    seed: int = 0
    repetitions: int = 100
    regret_convention: str = "no-reward"
    normalize_ground_truth: bool = True
    x_axis: str = "rounds"

    def __post_init__(self):
        if self.n_agents < 1:
            raise ConfigError("n_agents must be >= 1")
        if self.horizon < 1:
            raise ConfigError("horizon T must be >= 1")
        if self.dim < 1:
            raise ConfigError("dimension d must be >= 1")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if self.noise_scale < 0:
            raise ConfigError("noise scale R must be >= 0")
        if self.delta is not None and not 0.0 < self.delta < 1.0:
            raise ConfigError("delta must lie in (0, 1)")
        if self.ridge is not None and self.ridge <= 0:
            raise ConfigError("ridge lambda must be positive")
        if self.param_bound is not None and self.param_bound <= 0:
            raise ConfigError("parameter bound S must be positive")
        if self.regret_convention not in REGRET_CONVENTIONS:
            raise ConfigError(f"regret_convention must be one of {REGRET_CONVENTIONS}")
        if self.noise not in NOISE_KINDS:
            raise ConfigError(f"noise must be one of {NOISE_KINDS}")
        if self.x_axis not in X_AXES:
            raise ConfigError(f"x_axis must be one of {X_AXES}")

    @property
    def resolved_delta(self) -> float:
        return self.delta if self.delta is not None else 1.0 / (4.0 * self.horizon)

    def resolved_ridge(self, L: float) -> float:
        return self.ridge if self.ridge is not None else max(1.0, L ** 2)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    @property
    def config_id(self) -> str:
        return f"{self.topology}-N{self.n_agents}"

    def build_topology(self) -> Topology:
        return parse_topology(self.topology, self.n_agents, self.self_loops)

    def build_action_set(self) -> ActionSet:
        return parse_action_set(self.action_set, self.dim, self.half_width)


_REGULAR = re.compile(r"^(?:k_regular:(\d+)|(\d+)-regular)$")


def parse_topology(spec: str, n: int, self_loops: bool = True) -> Topology:
    """``complete``, ``cycle``, ``path``, ``k_regular:K`` / ``K-regular`` or ``custom:PATH``."""
    spec = spec.strip()
    m = _REGULAR.match(spec)
    try:
        if m:
            k = int(m.group(1) or m.group(2))
            return make_topology("k_regular", n, self_loops=self_loops, k=k)
        if spec.startswith("custom:"):
            return make_topology("custom", n, self_loops=self_loops, edge_file=spec[len("custom:"):])
        return make_topology(spec, n, self_loops=self_loops)
    except TopologyError as exc:
        raise ConfigError(f"topology {spec!r} with N={n}: {exc}") from exc


def parse_action_set(spec: str, dim: int, half_width: float = 1.0) -> ActionSet:
    """``hypercube`` or ``finite:PATH`` (one whitespace-separated action per line)."""
    spec = spec.strip()
    if spec == "hypercube":
        return ActionSet.hypercube(dim, half_width)
    if spec.startswith("finite:"):
        path = spec[len("finite:"):]
        arr = np.loadtxt(path, ndmin=2)
        if arr.shape[1] != dim:
            raise ConfigError(f"{path}: actions have dimension {arr.shape[1]}, config says d={dim}")
        return ActionSet.finite(arr)
    raise ConfigError(f"unknown action set {spec!r}")


def _coerce(name: str, raw: str):
    field = {f.name: f for f in dataclasses.fields(ExperimentConfig)}[name]
    text = raw.strip()
    ftype = str(field.type)
    if "None" in ftype and text.lower() in ("none", "auto", ""):
        return None
    if ftype.startswith("bool"):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
    try:
        if ftype.startswith("int"):
            return int(float(text)) if "e" in text.lower() else int(text)
        if ftype.startswith("float"):
            if "/" in text:
                num, den = text.split("/", 1)
                return float(num) / float(den)
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"{name}: cannot parse {raw!r}") from exc
    return text


def canonical_key(key: str) -> str:
    k = key.strip()
    names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    k = ALIASES.get(k.lower(), k.lower())
    if k not in names:
        raise ConfigError(f"unknown config key {key!r}")
    return k


def apply_overrides(config: ExperimentConfig, pairs: dict[str, str]) -> ExperimentConfig:
    changes = {canonical_key(k): _coerce(canonical_key(k), v) for k, v in pairs.items()}
    try:
        return config.replace(**changes)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def parse_config_text(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(comment_prefixes=("#",), inline_comment_prefixes=("#",),
                                       delimiters=("=",), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string("[experiment]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return apply_overrides(ExperimentConfig(), dict(parser["experiment"]))


def load_config(path: str | Path) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text())


def dump_config(config: ExperimentConfig) -> str:
    lines = []
    for f in dataclasses.fields(config):
        value = getattr(config, f.name)
        lines.append(f"{f.name} = {'auto' if value is None else value}")
    return "\n".join(lines) + "\n"
