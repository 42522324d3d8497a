"""Large-grid comparison of LA, IG, FIG and SA at omega = 1.

    python3 scripts/grid_comparison.py --runs 100 --out results/
"""

import argparse
from dataclasses import replace
from pathlib import Path

from femtosim.cli import execute, reproduce_config


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--runs", type=int, default=100)
    ap.add_argument("--seed", type=int, default=2014)
    ap.add_argument("--every-circle", action="store_true", help="populate all 25 cells instead of a checkerboard")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    cfg = replace(
        reproduce_config("t1"), runs=args.runs, seed=args.seed, workers=args.workers, alternate_circles=not args.every_circle
    )
    execute(cfg, Path(args.out), tag="grid_comparison")


if __name__ == "__main__":
    main()
