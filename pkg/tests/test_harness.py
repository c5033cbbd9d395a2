import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from malinucb.cli import main
from malinucb.config import ConfigError, ExperimentConfig, dump_config, load_config, parse_config_text
from malinucb.engine import run
from malinucb.experiment import (
    AggregateResult,
    _run_rep,
    aggregate,
    bootstrap_prob_less,
    run_experiment,
    sweep,
    theorem2_bound,
    theorem2_envelope,
)
from malinucb.export import CSV_HEADER, export_csv, export_plot, read_csv
from malinucb.topology import second_eigenvalue


def tiny(**kw):
    base = dict(n_agents=4, horizon=200, dim=3, repetitions=3)
    base.update(kw)
    return ExperimentConfig(**base)


class TestConfig:
    def test_defaults(self):
        cfg = ExperimentConfig(horizon=10_000)
        assert cfg.resolved_delta == pytest.approx(1 / 40_000)
        assert cfg.noise_scale == 0.1 and cfg.dim == 4 and cfg.repetitions == 100
        assert cfg.resolved_ridge(cfg.build_action_set().L) == 4.0

    def test_parse_with_aliases_and_comments(self):
        cfg = parse_config_text("# comment\nN = 16\nT = 1e3   # horizon\nlambda = 2\ndelta = 1/20\n"
                                "topology = 4-regular\nself_loops = no\n")
        assert (cfg.n_agents, cfg.horizon, cfg.ridge, cfg.delta) == (16, 1000, 2.0, 0.05)
        assert cfg.topology == "4-regular" and cfg.self_loops is False

    def test_dump_round_trip(self):
        cfg = tiny(topology="cycle", delta=0.01, regret_convention="hold-last-action")
        assert parse_config_text(dump_config(cfg)) == cfg

    @pytest.mark.parametrize("text", ["bogus = 1", "N = four", "T = 0", "reps = 0", "delta = 2",
                                      "regret_convention = other", "self_loops = maybe"])
    def test_errors(self, text):
        with pytest.raises(ConfigError):
            parse_config_text(text)

    def test_bad_topology_fails_before_running(self):
        with pytest.raises(ConfigError, match="k < n"):
            run_experiment(tiny(topology="8-regular", n_agents=6))

    def test_shipped_configs_load(self):
        assert load_config("configs/figure1.conf").topology == "complete"
        assert load_config("configs/figure2.conf").n_agents == 50


class TestRunExperiment:
    def test_single_rep_equals_run(self):
        cfg = tiny(repetitions=1, topology="cycle", n_agents=6, seed=5)
        agg = run_experiment(cfg)
        res = run(cfg, seed=5)
        n = res.total_rounds_used
        np.testing.assert_array_equal(agg.mean[:n], res.cumulative_regret)
        assert (agg.mean[n:] == res.final_regret).all()
        assert (agg.stderr == 0).all()

    def test_deterministic(self):
        a, b = run_experiment(tiny()), run_experiment(tiny())
        np.testing.assert_array_equal(a.mean, b.mean)
        np.testing.assert_array_equal(a.stderr, b.stderr)

    def test_seeds_and_stderr(self):
        cfg = tiny(seed=10, repetitions=4)
        agg = run_experiment(cfg, keep_trajectories=True)
        assert agg.seeds.tolist() == [10, 11, 12, 13]
        np.testing.assert_allclose(agg.stderr, agg.trajectories.std(axis=0, ddof=1) / 2)

    def test_parallel_matches_serial(self):
        cfg = tiny(repetitions=4)
        np.testing.assert_array_equal(run_experiment(cfg, jobs=2).mean, run_experiment(cfg).mean)

    def test_episode_axis(self):
        agg = run_experiment(tiny(x_axis="episodes"))
        assert len(agg.mean) == agg.n_episodes.max()

    @settings(max_examples=10, deadline=None)
    @given(st.permutations(range(5)))
    def test_permutation_invariant(self, perm):
        cfg = tiny(repetitions=5, horizon=100)
        topo = cfg.build_topology()
        outcomes = [_run_rep((cfg, s, topo, False, False)) for s in range(5)]
        ref = aggregate(cfg, topo, outcomes)
        shuffled = aggregate(cfg, topo, [outcomes[i] for i in perm])
        np.testing.assert_array_equal(ref.mean, shuffled.mean)
        np.testing.assert_array_equal(ref.stderr, shuffled.stderr)

    def test_episode_log(self, tmp_path):
        log = tmp_path / "ep.jsonl"
        run_experiment(tiny(repetitions=2), log_episodes=log, trace_consensus=True)
        rows = [json.loads(line) for line in log.read_text().splitlines()]
        assert {r["run"] for r in rows} == {0, 1}
        first = rows[0]
        for key in ("s", "t_start", "agent", "action", "raw_rewards", "consensus_rewards", "q",
                    "inst_regret_action", "inst_regret_comm", "config_id", "consensus_trace"):
            assert key in first
        assert len(first["consensus_trace"]) == first["q"]


class TestSweep:
    def test_single_size_matches_run(self):
        base = tiny()
        out = sweep(base, "network_size", [4])
        np.testing.assert_array_equal(out[0].mean, run_experiment(base).mean)

    def test_lambda2_attached(self):
        out = sweep(tiny(n_agents=12), "topology", ["complete", "cycle", "4-regular"])
        for agg in out:
            assert agg.lambda2 == second_eigenvalue(agg.config.build_topology().W)
            assert agg.spectral_gap == pytest.approx(1 - agg.lambda2)

    def test_failure_continues(self):
        out = sweep(tiny(n_agents=6), "topology", ["cycle", "8-regular", "complete"])
        assert [a.topology for a in out] == ["cycle", "complete"]
        assert [v for v, _ in out.failures] == ["8-regular"]

    def test_empty(self):
        with pytest.raises(ConfigError):
            sweep(tiny(), "topology", [])


class TestEnvelope:
    def test_degenerate_finite_positive(self):
        b = theorem2_bound(T=100, N=1, d=2, L=1.0, lam=1.0, R=0.0, S=1.0, delta=0.1, lambda2=0.0)
        assert math.isfinite(b) and b > 0

    @pytest.mark.parametrize("lam2", [0.0, 0.5, 0.95])
    def test_increasing_in_T(self, lam2):
        vals = [theorem2_bound(T, 8, 4, 2.0, 4.0, 0.1, 2.0, 0.01, lam2) for T in range(1, 3000, 7)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_report(self):
        cfg = tiny(horizon=300)
        agg = run_experiment(cfg)
        rep = theorem2_envelope(cfg, agg)
        assert len(rep.bound) == 300
        assert rep.violation_fraction == 0.0 and rep.ok
        assert (rep.final_regrets <= rep.rep_bounds).all()


class TestExport:
    def test_header_only(self, tmp_path):
        cfg = tiny()
        empty = np.zeros(0)
        agg = AggregateResult(config=cfg, lambda2=0.0, spectral_gap=1.0, x=empty, mean=empty, stderr=empty,
                              seeds=empty, final_regrets=empty, param_bounds=empty, coverage=empty,
                              n_episodes=empty)
        path = tmp_path / "e.csv"
        export_csv(agg, path)
        assert path.read_text() == ",".join(CSV_HEADER) + "\n"

    def test_round_trip(self, tmp_path):
        aggs = list(sweep(tiny(n_agents=6), "topology", ["complete", "cycle"]))
        path = tmp_path / "r.csv"
        export_csv(aggs, path)
        back = read_csv(path)
        for agg in aggs:
            np.testing.assert_array_equal(back[agg.config_id]["mean_cum_regret"], agg.mean)
            np.testing.assert_array_equal(back[agg.config_id]["stderr"], agg.stderr)
            np.testing.assert_array_equal(back[agg.config_id]["round"], agg.x)

    def test_csv_byte_identical(self, tmp_path):
        export_csv(run_experiment(tiny()), tmp_path / "a.csv")
        export_csv(run_experiment(tiny()), tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_svg_structure(self, tmp_path):
        aggs = list(sweep(tiny(n_agents=12, repetitions=2), "topology", ["cycle", "complete", "4-regular", "8-regular"]))
        path = tmp_path / "p.svg"
        export_plot(aggs, path, title="sweep")
        root = ET.parse(path).getroot()
        lines = [el for el in root.iter() if el.tag.endswith("polyline")]
        assert [el.get("data-label") for el in lines] == [
            "complete N=12", "8-regular N=12", "4-regular N=12", "cycle N=12"]
        text = path.read_text()
        assert "mean cumulative regret" in text and ">round<" in text

    def test_unwritable(self, tmp_path):
        with pytest.raises(OSError, match="missing"):
            export_csv(run_experiment(tiny(repetitions=1)), tmp_path / "missing" / "x.csv")


class TestCli:
    def test_run(self, tmp_path, capsys):
        conf = tmp_path / "c.conf"
        conf.write_text("N = 4\nT = 150\nd = 2\nreps = 2\n")
        out = tmp_path / "o.csv"
        assert main(["run", "-c", str(conf), "-o", str(out), "--plot", str(tmp_path / "o.svg")]) == 0
        assert out.read_text().startswith(",".join(CSV_HEADER))
        assert "complete-N4" in capsys.readouterr().out

    def test_config_error(self, tmp_path):
        conf = tmp_path / "c.conf"
        conf.write_text("N = 4\ntopology = 6-regular\n")
        assert main(["run", "-c", str(conf)]) == 1

    def test_io_error(self, tmp_path):
        conf = tmp_path / "c.conf"
        conf.write_text("T = 50\nreps = 1\n")
        assert main(["run", "-c", str(conf), "-o", str(tmp_path / "nope" / "o.csv")]) == 2
        assert main(["run", "-c", str(tmp_path / "absent.conf")]) == 2

    def test_sweep_and_envelope(self, tmp_path, capsys):
        conf = tmp_path / "c.conf"
        conf.write_text("N = 8\nT = 120\nd = 2\nreps = 2\n")
        assert main(["sweep", "-c", str(conf), "--axis", "topology", "--values", "complete,cycle"]) == 0
        assert main(["envelope", "-c", str(conf)]) == 0
        assert "violation fraction" in capsys.readouterr().out

    def test_topo_info(self, capsys):
        assert main(["topo-info", "--kind", "cycle", "--n", "10"]) == 0
        assert "0.872677" in capsys.readouterr().out
        assert main(["topo-info", "--kind", "k_regular", "--n", "4", "--k", "4"]) == 1


def test_bootstrap_prob():
    rng = np.random.default_rng(0)
    a, b = rng.normal(0, 1, 100), rng.normal(1, 1, 100)
    assert bootstrap_prob_less(a, b) > 0.99
    assert bootstrap_prob_less(b, a) < 0.01
