"""Mean convergence curves on the three-cell topology, plus a terminal sketch.

Writes convergence_{utility,power,efficiency}.csv. The sketch samples each curve
every few iterations so the shape can be checked without a plotting stack.

    python3 scripts/convergence_curves.py --runs 100 --out results/
"""

import argparse
from dataclasses import replace
from pathlib import Path

from femtosim import experiments as ex
from femtosim.cli import reproduce_config


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--runs", type=int, default=100)
    ap.add_argument("--seed", type=int, default=2014)
    ap.add_argument("--horizon", type=int, default=200)
    ap.add_argument("--step", type=int, default=20)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    cfg = replace(reproduce_config("fig3"), runs=args.runs, seed=args.seed, sa_iterations=args.horizon)
    batch = ex.run_batch(cfg.scenario_spec(), cfg.algorithms, cfg.params, cfg.runs, cfg.seed, cfg.settings())
    out = Path(args.out)
    resolved = cfg.to_dict()
    for metric in ("utility", "power", "efficiency"):
        path = ex.write_text(out / f"convergence_{metric}.csv", ex.curves_csv(batch.results, metric, resolved, args.horizon))
        curves = ex.mean_curves(batch.results, metric, args.horizon)
        print(f"\n{metric} ({path})")
        print("iter  " + "  ".join(f"{a:>8}" for a in curves))
        for t in range(0, args.horizon, args.step):
            print(f"{t + 1:4d}  " + "  ".join(f"{c[t]:8.2f}" for c in curves.values()))
    print()
    print(ex.metrics_table(batch.report, cfg.algorithms))


if __name__ == "__main__":
    main()
