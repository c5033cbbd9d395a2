"""Regret versus topology at N = 50 (complete, 8-regular, 4-regular, cycle).

Writes results/figure2.csv and results/figure2.svg. Prints the Spearman
correlation between spectral gap and final mean regret.
"""

import argparse
from pathlib import Path

from scipy.stats import spearmanr

from malinucb import export_csv, export_plot, load_config, sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-c", "--config", default="configs/figure2.conf")
    ap.add_argument("--topologies", default="complete,8-regular,4-regular,cycle")
    ap.add_argument("--reps", type=int)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--convention", choices=("no-reward", "hold-last-action"))
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    base = load_config(args.config)
    if args.reps:
        base = base.replace(repetitions=args.reps)
    if args.convention:
        base = base.replace(regret_convention=args.convention)
    results = sweep(base, "topology", args.topologies.split(","), jobs=args.jobs)
    for agg in results:
        print(f"{agg.config_id}: gap {agg.spectral_gap:.6f}, final mean regret "
              f"{agg.mean_final_regret:.2f} +/- {agg.stderr[-1]:.2f}")
    if len(results) > 1:
        rho = spearmanr([a.spectral_gap for a in results], [a.mean_final_regret for a in results]).statistic
        print(f"Spearman(gap, regret) = {rho:.3f}")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    export_csv(list(results), out / "figure2.csv")
    export_plot(list(results), out / "figure2.svg", title="N = 50, varying topology")


if __name__ == "__main__":
    main()
