"""Command-line front end.

    femtosim run --scenario simple --alg ig,fig,sa,la --omega 1.0 --runs 100 --seed 42
    femtosim run --scenario grid --alternate-circles --alg ig --omega-sweep 0,0.5,1,1.5,2 --runs 100
    femtosim run --validate-only config.yaml
    femtosim reproduce t1 [--fast]
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import yaml

from femtosim import experiments as ex
from femtosim.algorithms import ALGORITHMS
from femtosim.model import ModelParams

OUT_ENV = "FEMTOSIM_OUT"


@dataclass(frozen=True)
class Config:
    scenario: str = "simple"  # simple | grid | path to a topology file
    rows: int = 5
    cols: int = 5
    spacing: float = 14.0
    alternate_circles: bool = False
    gbr_rate: float = 10.0
    non_gbr_cap: float = 20.0
    params: ModelParams = field(default_factory=ModelParams)
    algorithms: tuple[str, ...] = ("ig", "fig", "sa", "la")
    omegas: tuple[float, ...] = ()
    runs: int = 100
    seed: int = 0
    max_iterations: int = 10_000
    sa_iterations: int = 3_000
    selection: str = "round_robin"
    sa_beta0: float = 0.05
    sa_tau: float = 50.0
    sa_window: int = 100
    workers: int = 1
    output_dir: str = "results"

    def validate(self) -> Config:
        if self.runs < 1:
            raise ValueError(f"runs must be >= 1, got {self.runs}")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad or not self.algorithms:
            raise ValueError(f"unknown algorithms {bad}; choose from {list(ALGORITHMS)}")
        if self.selection not in ("round_robin", "random"):
            raise ValueError(f"unknown selection {self.selection!r}")
        if self.max_iterations < 1 or self.sa_iterations < 1:
            raise ValueError("iteration limits must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if any(o < 0 for o in self.omegas):
            raise ValueError("omega values must be non-negative")
        self.scenario_spec()
        return self

    def scenario_spec(self) -> ex.Scenario:
        if self.scenario in ("simple", "grid"):
            kind, path = self.scenario, None
        else:
            kind, path = "file", self.scenario
            if not Path(path).is_file():
                raise FileNotFoundError(f"topology file not found: {path}")
        return ex.Scenario(
            kind, self.rows, self.cols, self.spacing, self.alternate_circles, path, self.gbr_rate, self.non_gbr_cap
        )

    def settings(self) -> ex.BatchSettings:
        return ex.BatchSettings(
            self.max_iterations, self.sa_iterations, self.selection, self.sa_beta0, self.sa_tau, self.sa_window
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["algorithms"] = list(self.algorithms)
        d["omegas"] = list(self.omegas)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> Config:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        if "params" in data:
            p = data["params"] or {}
            bad = set(p) - {f.name for f in fields(ModelParams)}
            if bad:
                raise ValueError(f"unknown model parameter keys: {sorted(bad)}")
            data["params"] = ModelParams(**p)
        for key in ("algorithms", "omegas"):
            if key in data:
                value = data[key]
                if isinstance(value, str):
                    value = [v for v in value.split(",") if v]
                data[key] = tuple(float(v) for v in value) if key == "omegas" else tuple(str(v).lower() for v in value)
        try:
            return cls(**data).validate()
        except TypeError as exc:
            raise ValueError(f"invalid config: {exc}") from None


def load_config(path: str | Path) -> Config:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    data = yaml.safe_load(path.read_text()) or {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a mapping")
    return Config.from_dict(data)


def dump_config(cfg: Config) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


# --- execution -------------------------------------------------------------


def execute(cfg: Config, out: Path, tag: str = "run", quiet: bool = False) -> dict:
    """Run a batch (or an omega sweep) and write trace, report and plot-data files."""
    scenario = cfg.scenario_spec()
    settings = cfg.settings()
    written = {}
    resolved = cfg.to_dict()
    if cfg.omegas:
        sweep = ex.omega_sweep(scenario, cfg.algorithms, cfg.params, cfg.omegas, cfg.runs, cfg.seed, settings, cfg.workers)
        reports = {f"{o:g}": b.report.to_dict() for o, b in sweep.items()}
        written["report"] = ex.write_text(out / f"{tag}_report.json", json.dumps({"config": resolved, "sweep": reports}, indent=2, sort_keys=True) + "\n")
        tables = []
        for metric in ("power", "total_utility", "energy_efficiency"):
            tables.append(f"[{ex.LABELS[metric]}]\n" + ex.sweep_table(sweep, cfg.algorithms, metric))
        text = "\n".join(tables)
        written["table"] = ex.write_text(out / f"{tag}_tables.txt", ex._header(resolved) + text)
        results = [r for b in sweep.values() for r in b.results]
        written["trace"] = ex.write_text(out / f"{tag}_trace.csv", ex.trace_csv(results, resolved))
        if not quiet:
            print(text)
        return {"sweep": sweep, "files": written}

    batch = ex.run_batch(scenario, cfg.algorithms, cfg.params, cfg.runs, cfg.seed, settings, cfg.workers)
    report = batch.report
    report.config = resolved
    written["report"] = ex.write_text(out / f"{tag}_report.json", ex.report_json(report))
    written["trace"] = ex.write_text(out / f"{tag}_trace.csv", ex.trace_csv(batch.results, resolved))
    written["plot"] = ex.write_text(out / f"{tag}_plot.csv", ex.plot_data_csv(batch.results, resolved))
    text = ex.metrics_table(report, cfg.algorithms)
    written["table"] = ex.write_text(out / f"{tag}_table.txt", ex._header(resolved) + text)
    if not quiet:
        print(text)
    return {"batch": batch, "files": written}


def reproduce_config(target: str, fast: bool = False) -> Config:
    grid = dict(scenario="grid", alternate_circles=True, selection="random", seed=2014)
    if target == "t1":
        cfg = Config(**grid, algorithms=("la", "ig", "fig", "sa"))
    elif target in ("t2", "t3", "t4"):
        cfg = Config(**grid, algorithms=("ig", "fig", "sa"), omegas=ex.DEFAULT_OMEGAS)
    elif target == "fig3":
        cfg = Config(scenario="simple", algorithms=("ig", "fig", "sa", "la"), selection="random", sa_iterations=200, seed=2014)
    else:
        raise ValueError(f"unknown reproduction target {target!r}")
    return replace(cfg, runs=10) if fast else cfg


def reproduce(target: str, out: Path, fast: bool = False, workers: int = 1) -> dict[str, Path]:
    cfg = replace(reproduce_config(target, fast), workers=workers)
    if target == "fig3":
        batch = ex.run_batch(cfg.scenario_spec(), cfg.algorithms, cfg.params, cfg.runs, cfg.seed, cfg.settings(), workers)
        resolved = cfg.to_dict()
        files = {}
        for name, metric in (("utility", "utility"), ("power", "power"), ("efficiency", "efficiency")):
            files[name] = ex.write_text(out / f"fig3_{name}.csv", ex.curves_csv(batch.results, metric, resolved, horizon=cfg.sa_iterations))
        files["trace"] = ex.write_text(out / "fig3_trace.csv", ex.trace_csv(batch.results, resolved))
        print(ex.metrics_table(batch.report, cfg.algorithms))
        return files
    if target == "t1":
        return execute(cfg, out, tag="t1")["files"]
    metric = {"t2": "power", "t3": "total_utility", "t4": "energy_efficiency"}[target]
    res = execute(cfg, out, tag=target, quiet=True)
    print(f"[{ex.LABELS[metric]}]\n" + ex.sweep_table(res["sweep"], cfg.algorithms, metric))
    return res["files"]


# --- argument parsing ------------------------------------------------------


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="femtosim", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment")
    run_p.add_argument("--config", help="YAML config file; flags override its values")
    run_p.add_argument("--validate-only", metavar="CONFIG", help="validate a config file and exit")
    run_p.add_argument("--dump-config", metavar="PATH", help="write the resolved config to PATH ('-' for stdout) and exit")
    run_p.add_argument("--scenario", help="simple, grid, or a topology file path")
    run_p.add_argument("--rows", type=int)
    run_p.add_argument("--cols", type=int)
    run_p.add_argument("--spacing", type=float)
    run_p.add_argument("--alternate-circles", action="store_true", default=None, help="populate only every other grid cell")
    run_p.add_argument("--alg", help="comma-separated subset of ig,fig,sa,la")
    run_p.add_argument("--omega", type=float)
    run_p.add_argument("--omega-sweep", help="comma-separated omega values")
    run_p.add_argument("--runs", type=int)
    run_p.add_argument("--seed", type=int)
    run_p.add_argument("--max-iterations", type=int)
    run_p.add_argument("--sa-iterations", type=int)
    run_p.add_argument("--selection", choices=("round_robin", "random"))
    run_p.add_argument("--sa-beta0", type=float)
    run_p.add_argument("--sa-tau", type=float)
    run_p.add_argument("--sa-window", type=int)
    run_p.add_argument("--workers", type=int)
    run_p.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./results)")

    rep = sub.add_parser("reproduce", help="regenerate a table or figure of the evaluation")
    rep.add_argument("target", choices=("t1", "t2", "t3", "t4", "fig3"))
    rep.add_argument("--fast", action="store_true", help="10 runs instead of 100")
    rep.add_argument("--workers", type=int, default=1)
    rep.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./results)")
    return parser


def config_from_args(args: argparse.Namespace) -> Config:
    base = load_config(args.config).to_dict() if args.config else Config().to_dict()
    overrides = {
        "scenario": args.scenario,
        "rows": args.rows,
        "cols": args.cols,
        "spacing": args.spacing,
        "alternate_circles": args.alternate_circles,
        "runs": args.runs,
        "seed": args.seed,
        "max_iterations": args.max_iterations,
        "sa_iterations": args.sa_iterations,
        "selection": args.selection,
        "sa_beta0": args.sa_beta0,
        "sa_tau": args.sa_tau,
        "sa_window": args.sa_window,
        "workers": args.workers,
        "output_dir": args.out,
    }
    base.update({k: v for k, v in overrides.items() if v is not None})
    if args.alg:
        base["algorithms"] = _csv_list(args.alg)
    if args.omega_sweep:
        base["omegas"] = [float(v) for v in _csv_list(args.omega_sweep)]
    if args.omega is not None:
        base["params"] = {**base["params"], "omega": args.omega}
    return Config.from_dict(base)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "reproduce":
            out = Path(args.out or os.environ.get(OUT_ENV, "results"))
            files = reproduce(args.target, out, args.fast, args.workers)
            for name, path in files.items():
                print(f"wrote {name}: {path}")
            return 0

        if args.validate_only:
            load_config(args.validate_only)
            print(f"{args.validate_only}: ok")
            return 0
        cfg = config_from_args(args)
        if args.out is None and not args.config and os.environ.get(OUT_ENV):
            cfg = replace(cfg, output_dir=os.environ[OUT_ENV])
        if args.dump_config:
            text = dump_config(cfg)
            if args.dump_config == "-":
                sys.stdout.write(text)
            else:
                Path(args.dump_config).write_text(text)
            return 0
        res = execute(cfg, Path(cfg.output_dir))
        for name, path in res["files"].items():
            print(f"wrote {name}: {path}")
        return 0
    except (ValueError, FileNotFoundError, TypeError, yaml.YAMLError) as exc:
        print(f"femtosim: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
