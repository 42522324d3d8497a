"""Power, utility and energy efficiency of IG/FIG/SA as the power weight varies.

    python3 scripts/omega_sweep.py --runs 100 --alg ig,fig --out results/
"""

import argparse
from dataclasses import replace
from pathlib import Path

from femtosim.cli import execute, reproduce_config


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--runs", type=int, default=100)
    ap.add_argument("--seed", type=int, default=2014)
    ap.add_argument("--alg", default="ig,fig,sa")
    ap.add_argument("--omegas", default="0,0.5,1,1.5,2")
    ap.add_argument("--selection", default="random", choices=("random", "round_robin"))
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    cfg = replace(
        reproduce_config("t2"),
        runs=args.runs,
        seed=args.seed,
        algorithms=tuple(args.alg.split(",")),
        omegas=tuple(float(o) for o in args.omegas.split(",")),
        selection=args.selection,
        workers=args.workers,
    )
    execute(cfg.validate(), Path(args.out), tag="omega_sweep")


if __name__ == "__main__":
    main()
