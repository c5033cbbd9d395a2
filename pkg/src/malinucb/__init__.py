"""Multi-agent optimistic linear bandits with Chebyshev-accelerated gossip."""

from .bandit import (ActionSet, ConfidenceRegion, ProblemConstants, RlsState, beta, contains,
                     rls_update, select_optimistic)
from .config import ConfigError, ExperimentConfig, load_config
from .consensus import comm_length, comm_length_eps, consensus_average, lemma1_matrix_bound, mix_round
from .engine import EpisodeRecord, GroundTruth, RunResult, run, sample_ground_truth, sample_rewards
from .experiment import AggregateResult, run_experiment, sweep, theorem2_envelope
from .export import export_csv, export_plot
from .topology import Adjacency, Topology, TopologyError, build_graph, second_eigenvalue, structure_matrix

__version__ = "0.1.0"
