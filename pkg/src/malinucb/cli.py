"""Command line entry point: ``run``, ``sweep``, ``envelope`` and ``topo-info``."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .config import ConfigError, ExperimentConfig, apply_overrides, load_config, parse_topology
from .consensus import comm_length
from .experiment import run_experiment, sweep, theorem2_envelope
from .export import export_csv, export_plot
from .topology import TopologyError

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2


def _config_from_args(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key] = value
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if getattr(args, "reps", None) is not None:
        overrides["repetitions"] = str(args.reps)
    if getattr(args, "x_axis", None) is not None:
        overrides["x_axis"] = args.x_axis
    return apply_overrides(config, overrides)


def _summary(agg) -> str:
    se = agg.stderr[-1] if len(agg.stderr) else 0.0
    return (f"{agg.config_id}: lambda2={agg.lambda2:.6f} gap={agg.spectral_gap:.6f} "
            f"reps={len(agg.final_regrets)} final mean regret={agg.mean_final_regret:.3f} +/- {se:.3f}")


def cmd_run(args) -> int:
    config = _config_from_args(args)
    agg = run_experiment(config, jobs=args.jobs, log_episodes=args.log_episodes,
                         trace_consensus=args.trace_consensus)
    print(_summary(agg))
    if args.output:
        export_csv(agg, args.output)
    if args.plot:
        export_plot(agg, args.plot)
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _config_from_args(args)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    results = sweep(config, args.axis, values, jobs=args.jobs)
    for agg in results:
        print(_summary(agg))
    for value, err in results.failures:
        print(f"FAILED {args.axis}={value}: {err}", file=sys.stderr)
    print(f"{len(results)} of {len(values)} variants completed")
    if args.output and results:
        export_csv(list(results), args.output)
    if args.plot and results:
        export_plot(list(results), args.plot)
    return EXIT_OK if not results.failures else EXIT_CONFIG


def cmd_envelope(args) -> int:
    config = _config_from_args(args)
    agg = run_experiment(config, jobs=args.jobs)
    report = theorem2_envelope(config, agg)
    print(_summary(agg))
    print(f"bound at T={config.horizon}: {report.bound[-1]:.3f} (per-rep range "
          f"{report.rep_bounds.min():.3f}..{report.rep_bounds.max():.3f})")
    print(f"max final regret: {agg.final_regrets.max():.3f}")
    print(f"violation fraction: {report.violation_fraction:.4f} (delta={report.delta:.3g}) "
          f"-> {'OK' if report.ok else 'EXCEEDED'}")
    return EXIT_OK


def cmd_topo_info(args) -> int:
    spec = args.kind if args.k is None else f"k_regular:{args.k}"
    if args.kind == "custom":
        spec = f"custom:{args.edges}"
    topo = parse_topology(spec, args.n, self_loops=not args.no_self_loops)
    W = topo.W
    nz = W[W > 0]
    print(f"topology      {topo.label}")
    print(f"n             {topo.n}")
    print(f"edges         {int((np.count_nonzero(topo.adjacency.edges) - np.trace(topo.adjacency.edges)) // 2)}")
    print(f"W min/max nz  {nz.min():.6g} / {nz.max():.6g}")
    print(f"row sum err   {np.max(np.abs(W.sum(axis=1) - 1)):.3g}")
    print(f"lambda2       {topo.lambda2:.12f}")
    print(f"spectral gap  {topo.spectral_gap:.12f}")
    print(f"q(1)          {comm_length(1, topo.n, topo.lambda2)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="malinucb", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("-c", "--config", required=config_required, help="key = value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config value")
        p.add_argument("--seed", type=int, help="base seed (repetition r uses seed + r)")
        p.add_argument("--reps", type=int, help="number of repetitions")
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        p.add_argument("--x-axis", choices=("rounds", "episodes"))

    p = sub.add_parser("run", help="Monte-Carlo run of one configuration")
    common(p)
    p.add_argument("-o", "--output", help="CSV output path")
    p.add_argument("--plot", help="SVG output path")
    p.add_argument("--log-episodes", metavar="PATH", help="append JSON-lines episode records")
    p.add_argument("--trace-consensus", action="store_true", help="include per-round gossip values in the log")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="vary topology or network size")
    common(p)
    p.add_argument("--axis", required=True, choices=("topology", "network-size"))
    p.add_argument("--values", required=True, help="comma-separated list")
    p.add_argument("-o", "--output", help="CSV output path")
    p.add_argument("--plot", help="SVG output path")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("envelope", help="compare final regret with the high-probability bound")
    common(p)
    p.set_defaults(func=cmd_envelope)

    p = sub.add_parser("topo-info", help="structure matrix statistics")
    p.add_argument("--kind", required=True, choices=("complete", "cycle", "path", "k_regular", "custom"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, help="degree for k_regular")
    p.add_argument("--edges", help="edge-list file for custom")
    p.add_argument("--no-self-loops", action="store_true")
    p.set_defaults(func=cmd_topo_info)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, TopologyError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
