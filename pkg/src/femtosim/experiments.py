"""Multi-run experiment harness: metrics, aggregation, omega sweeps and trace export."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from femtosim.algorithms import IterationTrace, RunConfig, run
from femtosim.model import DecisionProfile, ModelParams, ProfileState, gbr_rejections, non_gbr_utility
from femtosim.topology import DEFAULT_SPACING, Topology, grid_topology, load_topology, simple_topology

METRICS = ("total_utility", "power", "energy_efficiency", "gbr_reject_ratio", "non_gbr_utility", "active_fbs")
TRACE_COLUMNS = ("run", "algorithm", "iteration", "utility", "power_w", "efficiency", "potential", "active_fbs", "ue_updates")
DEFAULT_OMEGAS = (0.0, 0.5, 1.0, 1.5, 2.0)


@dataclass(frozen=True)
class MetricsSnapshot:
    total_utility: float
    power: float
    energy_efficiency: float
    gbr_reject_ratio: float
    non_gbr_utility: float
    active_fbs: float


def compute_metrics(profile: DecisionProfile, topo: Topology, params: ModelParams) -> MetricsSnapshot:
    state = ProfileState.from_profile(profile, topo, params)
    utility = state.total_utility()
    power = state.total_power()
    rejected, n_gbr = gbr_rejections(state)
    return MetricsSnapshot(
        utility, power, utility / power, rejected / n_gbr if n_gbr else 0.0, non_gbr_utility(state), state.active_fbs()
    )


def window_metrics(trace: IterationTrace, window: int) -> MetricsSnapshot:
    """Trailing-window mean of an oscillating trace; efficiency is mean utility over mean power."""
    recs = trace.records[-window:]
    utility = float(np.mean([r.utility for r in recs]))
    power = float(np.mean([r.power for r in recs]))
    return MetricsSnapshot(
        utility,
        power,
        utility / power,
        float(np.mean([r.gbr_reject_ratio for r in recs])),
        float(np.mean([r.non_gbr_utility for r in recs])),
        float(np.mean([r.active_fbs for r in recs])),
    )


# --- scenarios -------------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    kind: str = "simple"  # simple | grid | file
    rows: int = 5
    cols: int = 5
    spacing: float = DEFAULT_SPACING
    alternate: bool = False
    path: str | None = None
    gbr_rate: float = 10.0
    non_gbr_cap: float = 20.0

    def __post_init__(self):
        if self.kind not in ("simple", "grid", "file"):
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if self.kind == "file" and not self.path:
            raise ValueError("a file scenario needs a topology path")

    @property
    def random(self) -> bool:
        return self.kind == "grid"

    def build(self, seed: np.random.SeedSequence | int = 0) -> Topology:
        if self.kind == "simple":
            return simple_topology(self.path)
        if self.kind == "file":
            return load_topology(self.path)
        return grid_topology(
            self.rows, self.cols, self.spacing, seed, d=self.gbr_rate, c=self.non_gbr_cap, alternate=self.alternate
        )


# --- batches ---------------------------------------------------------------


@dataclass
class RunResult:
    run: int
    algorithm: str
    metrics: MetricsSnapshot
    iterations: int  # last iteration that changed the profile
    ue_updates: int
    converged: bool
    trace: IterationTrace


@dataclass
class AggregateReport:
    runs: int
    config: dict
    stats: dict[str, dict[str, dict[str, float]]] = field(default_factory=dict)

    def mean(self, algorithm: str, metric: str) -> float:
        return self.stats[algorithm][metric]["mean"]

    def std(self, algorithm: str, metric: str) -> float:
        return self.stats[algorithm][metric]["std"]

    def to_dict(self) -> dict:
        return {"runs": self.runs, "config": self.config, "stats": self.stats}


@dataclass
class BatchResult:
    report: AggregateReport
    results: list[RunResult]

    def by_algorithm(self, algorithm: str) -> list[RunResult]:
        return [r for r in self.results if r.algorithm == algorithm]


@dataclass(frozen=True)
class BatchSettings:
    max_iterations: int = 10_000
    sa_iterations: int = 3_000
    selection: str = "round_robin"
    sa_beta0: float = 0.05
    sa_tau: float = 50.0
    sa_window: int = 100


def _run_seeds(seed: int, runs: int) -> list[tuple[np.random.SeedSequence, int]]:
    """Per run: a topology seed sequence and an integer algorithm seed, from independent streams."""
    out = []
    for child in np.random.SeedSequence(seed).spawn(runs):
        topo_ss, algo_ss = child.spawn(2)
        out.append((topo_ss, int(algo_ss.generate_state(1)[0])))
    return out


def _one_run(args) -> list[RunResult]:
    r, scenario, algorithms, params, settings, topo_ss, algo_seed = args
    topo = scenario.build(topo_ss)
    results = []
    for alg in algorithms:
        cfg = RunConfig(
            alg,
            max_iterations=settings.sa_iterations if alg == "sa" else settings.max_iterations,
            seed=algo_seed,
            selection=settings.selection,
            sa_beta0=settings.sa_beta0,
            sa_tau=settings.sa_tau,
            sa_window=settings.sa_window,
        )
        try:
            profile, trace = run(topo, params, cfg)
        except Exception as exc:
            raise RuntimeError(f"run {r} ({alg}) failed: {exc}") from exc
        if alg == "sa":
            metrics = window_metrics(trace, settings.sa_window)
        else:
            metrics = compute_metrics(profile, topo, params)
        last = trace.records[trace.converged_at - 1] if trace.converged_at else trace.records[0]
        results.append(RunResult(r, alg, metrics, trace.converged_at, last.ue_updates, trace.converged, trace))
    return results


def aggregate(results: Sequence[RunResult], runs: int, config: dict) -> AggregateReport:
    report = AggregateReport(runs, config)
    for alg in dict.fromkeys(r.algorithm for r in results):
        rows = [r for r in results if r.algorithm == alg]
        stats = {}
        for name in METRICS + ("iterations", "ue_updates"):
            if name in METRICS:
                values = np.array([getattr(r.metrics, name) for r in rows], dtype=float)
            else:
                values = np.array([getattr(r, name) for r in rows], dtype=float)
            std = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
            stats[name] = {"mean": float(np.mean(values)), "std": std}
        report.stats[alg] = stats
    return report


def run_batch(
    scenario: Scenario,
    algorithms: Sequence[str],
    params: ModelParams,
    runs: int,
    seed: int,
    settings: BatchSettings = BatchSettings(),
    workers: int = 1,
) -> BatchResult:
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    jobs = [
        (r, scenario, tuple(algorithms), params, settings, topo_ss, algo_seed)
        for r, (topo_ss, algo_seed) in enumerate(_run_seeds(seed, runs))
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_one_run, jobs))
    else:
        chunks = [_one_run(job) for job in jobs]
    results = [res for chunk in chunks for res in chunk]
    config = {
        "scenario": asdict(scenario),
        "algorithms": list(algorithms),
        "params": asdict(params),
        "runs": runs,
        "seed": seed,
        "settings": asdict(settings),
    }
    return BatchResult(aggregate(results, runs, config), results)


def omega_sweep(
    scenario: Scenario,
    algorithms: Sequence[str],
    params: ModelParams,
    omegas: Iterable[float] = DEFAULT_OMEGAS,
    runs: int = 100,
    seed: int = 0,
    settings: BatchSettings = BatchSettings(),
    workers: int = 1,
) -> dict[float, BatchResult]:
    omegas = list(omegas)
    if not omegas:
        raise ValueError("omega sweep needs at least one value")
    out = {}
    for omega in omegas:
        swept = ModelParams(**{**asdict(params), "omega": float(omega)})
        out[float(omega)] = run_batch(scenario, algorithms, swept, runs, seed, settings, workers)
    return out


# --- output ----------------------------------------------------------------


def _header(config: dict) -> str:
    return "# config: " + json.dumps(config, sort_keys=True) + "\n"


def trace_csv(results: Sequence[RunResult], config: dict) -> str:
    buf = io.StringIO()
    buf.write(_header(config))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for res in results:
        for rec in res.trace.records:
            writer.writerow(
                (res.run, res.algorithm, rec.iteration, repr(rec.utility), repr(rec.power), repr(rec.efficiency),
                 repr(rec.potential), rec.active_fbs, rec.ue_updates)
            )
    return buf.getvalue()


def mean_curves(results: Sequence[RunResult], metric: str, horizon: int | None = None) -> dict[str, np.ndarray]:
    """Per-algorithm mean of a trace column over runs; finished runs hold their last value."""
    curves = {}
    for alg in dict.fromkeys(r.algorithm for r in results):
        traces = [r.trace.column(metric) for r in results if r.algorithm == alg]
        h = horizon or max(len(t) for t in traces)
        padded = np.array([np.concatenate([t[:h], np.full(max(0, h - len(t)), t[-1])]) for t in traces])
        curves[alg] = padded.mean(axis=0)
    return curves


def curves_csv(results: Sequence[RunResult], metric: str, config: dict, horizon: int | None = None) -> str:
    curves = mean_curves(results, metric, horizon)
    algs = list(curves)
    buf = io.StringIO()
    buf.write(_header(config))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["iteration", *algs])
    for t in range(max(len(c) for c in curves.values())):
        writer.writerow([t + 1, *(repr(float(curves[a][t])) if t < len(curves[a]) else "" for a in algs)])
    return buf.getvalue()


def plot_data_csv(results: Sequence[RunResult], config: dict, horizon: int | None = None) -> str:
    """Long-format mean curves for the utility, power and efficiency panels."""
    panels = {name: mean_curves(results, name, horizon) for name in ("utility", "power", "efficiency")}
    buf = io.StringIO()
    buf.write(_header(config))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["algorithm", "iteration", "utility", "power_w", "efficiency"])
    for alg in panels["utility"]:
        for t in range(len(panels["utility"][alg])):
            writer.writerow([alg, t + 1, *(repr(float(panels[p][alg][t])) for p in ("utility", "power", "efficiency"))])
    return buf.getvalue()


LABELS = {
    "total_utility": "Utility",
    "gbr_reject_ratio": "GBR Reject Ratio",
    "non_gbr_utility": "Non-GBR Utility",
    "power": "Power Consumption (W)",
    "energy_efficiency": "Energy Efficiency",
}


def _cell(mean: float, std: float, percent: bool = False) -> str:
    if percent:
        return f"{100 * mean:.2f}%±{100 * std:.2f}%"
    return f"{mean:.2f}±{std:.2f}"


def metrics_table(report: AggregateReport, algorithms: Sequence[str]) -> str:
    """Metric-by-algorithm table in the large-topology comparison layout."""
    rows = [["Metric", *[a.upper() for a in algorithms]]]
    for metric, label in LABELS.items():
        rows.append([label, *(_cell(report.mean(a, metric), report.std(a, metric), metric == "gbr_reject_ratio") for a in algorithms)])
    return _format_rows(rows)


def sweep_table(sweep: dict[float, BatchResult], algorithms: Sequence[str], metric: str) -> str:
    rows = [["omega", *[a.upper() for a in algorithms]]]
    for omega, batch in sweep.items():
        rows.append([f"{omega:g}", *(_cell(batch.report.mean(a, metric), batch.report.std(a, metric)) for a in algorithms)])
    return _format_rows(rows)


def _format_rows(rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows) + "\n"


def write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def report_json(report: AggregateReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def pooled_std(*stds: float) -> float:
    return math.sqrt(sum(s * s for s in stds) / len(stds))
