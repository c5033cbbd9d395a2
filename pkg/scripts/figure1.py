"""Regret versus network size on complete graphs (N = 4, 16, 64).

Writes results/figure1.csv and results/figure1.svg.
"""

import argparse
from pathlib import Path

from malinucb import export_csv, export_plot, load_config, sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-c", "--config", default="configs/figure1.conf")
    ap.add_argument("--sizes", default="4,16,64")
    ap.add_argument("--reps", type=int)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    base = load_config(args.config)
    if args.reps:
        base = base.replace(repetitions=args.reps)
    results = sweep(base, "network_size", [int(v) for v in args.sizes.split(",")], jobs=args.jobs)
    for agg in results:
        print(f"{agg.config_id}: final mean regret {agg.mean_final_regret:.2f} +/- {agg.stderr[-1]:.2f}")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    export_csv(list(results), out / "figure1.csv")
    export_plot(list(results), out / "figure1.svg", title="complete graphs, varying N")


if __name__ == "__main__":
    main()
