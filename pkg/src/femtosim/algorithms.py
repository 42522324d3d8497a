"""Best-response search, the iterative greedy algorithms (IG, FIG) and the SA/LA benchmarks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from femtosim.model import Decision, DecisionProfile, ModelParams, ProfileState, gbr_rejections, non_gbr_utility
from femtosim.topology import Topology, conflict_graph, greedy_color

# profits closer than this are treated as ties
TIE_TOL = 1e-9

Algorithm = Literal["ig", "fig", "sa", "la"]
ALGORITHMS: tuple[str, ...] = ("ig", "fig", "sa", "la")


@dataclass(frozen=True)
class RunConfig:
    algorithm: Algorithm = "ig"
    max_iterations: int = 10_000
    seed: int = 0
    selection: Literal["round_robin", "random"] = "round_robin"
    sa_beta0: float = 0.05
    sa_tau: float = 50.0
    sa_window: int = 100
    stop_on_convergence: bool = True

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.selection not in ("round_robin", "random"):
            raise ValueError(f"unknown selection order {self.selection!r}")
        if self.sa_beta0 < 0 or self.sa_tau <= 0 or self.sa_window < 1:
            raise ValueError("SA schedule needs beta0 >= 0, tau > 0 and window >= 1")

    def beta(self, t: int) -> float:
        return self.sa_beta0 * (1.0 + t / self.sa_tau)


@dataclass
class TraceRecord:
    iteration: int
    utility: float
    power: float
    efficiency: float
    potential: float
    active_fbs: int
    ue_updates: int
    changed: bool
    gbr_reject_ratio: float = 0.0
    non_gbr_utility: float = 0.0
    unassociated: int = 0


@dataclass
class IterationTrace:
    algorithm: str
    records: list[TraceRecord] = field(default_factory=list)
    converged: bool = False
    # index of the last iteration that changed the profile (0 if none did)
    converged_at: int = 0

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def record(self, state: ProfileState, iteration: int, updates: int, changed: bool) -> None:
        utility = state.total_utility()
        power = state.total_power()
        rejected, n_gbr = gbr_rejections(state)
        self.records.append(
            TraceRecord(
                iteration,
                utility,
                power,
                utility / power,
                state.potential(),
                state.active_fbs(),
                updates,
                changed,
                rejected / n_gbr if n_gbr else 0.0,
                non_gbr_utility(state),
                sum(1 for b in state.assoc if b < 0),
            )
        )
        if changed:
            self.converged_at = iteration


@dataclass(frozen=True)
class BestResponse:
    decision: Decision
    profit: float
    improved: bool


# --- best response ---------------------------------------------------------


def _argmax_response(state: ProfileState, i: int) -> tuple[int, int, float, float]:
    """Best candidate (b, k), its profit, and the profit of the current decision."""
    current = (state.assoc[i], state.level[i])
    current_profit = state.local_profit(i, *current)
    best, best_profit = None, -math.inf
    # candidates come out ordered by FBS id then level, so the first strict maximum wins ties
    for b, k in state.candidates(i):
        profit = state.local_profit(i, b, k)
        if profit > best_profit + TIE_TOL:
            best, best_profit = (b, k), profit
    if current[0] >= 0 and current_profit >= best_profit - TIE_TOL:
        return current[0], current[1], current_profit, current_profit
    return best[0], best[1], best_profit, current_profit


def best_response(u: int, profile: DecisionProfile, topo: Topology, params: ModelParams) -> BestResponse:
    if u not in topo.ue_index:
        raise KeyError(f"unknown UE id {u}")
    state = ProfileState.from_profile(profile, topo, params)
    b, k, profit, current = _argmax_response(state, topo.ue_index[u])
    return BestResponse(Decision(topo.fbs_ids[b], k), profit, profit > current + TIE_TOL)


def equilibrium_check(
    profile: DecisionProfile, topo: Topology, params: ModelParams
) -> tuple[bool, list[tuple[int, Decision, Decision, float]]]:
    """Whether no UE can strictly raise its local profit alone.

    Returns the flag and the list of improving deviations as
    ``(ue, current, better, gain)`` with the best deviation per UE.
    """
    state = ProfileState.from_profile(profile, topo, params)
    deviations = []
    for i, u in enumerate(topo.ue_ids):
        if state.assoc[i] < 0:
            raise ValueError(f"UE {u} is unassociated; equilibria are defined on associated profiles")
        b, k, profit, current = _argmax_response(state, i)
        if profit > current + TIE_TOL:
            deviations.append((u, profile[u], Decision(topo.fbs_ids[b], k), profit - current))
    return not deviations, deviations


# --- IG / FIG --------------------------------------------------------------


def _initial_state(topo: Topology, params: ModelParams) -> ProfileState:
    n = len(topo.ues)
    return ProfileState(topo, params, [-1] * n, [0] * n)


def ig_run(topo: Topology, params: ModelParams, cfg: RunConfig) -> tuple[DecisionProfile, IterationTrace]:
    """Iterative greedy: one UE best-responds per iteration until a full pass changes nothing."""
    state = _initial_state(topo, params)
    trace = IterationTrace("ig")
    n = len(topo.ues)
    rng = np.random.default_rng(cfg.seed)
    unchanged_since: set[int] = set()
    streak = 0
    for t in range(1, cfg.max_iterations + 1):
        if cfg.selection == "round_robin":
            i = (t - 1) % n
        else:
            i = int(rng.integers(n))
        b, k, _, _ = _argmax_response(state, i)
        changed = state.apply(i, b, k)
        trace.record(state, t, t, changed)
        if changed:
            streak = 0
            unchanged_since.clear()
        else:
            streak += 1
            unchanged_since.add(i)
        full_pass = streak >= n if cfg.selection == "round_robin" else len(unchanged_since) == n
        if full_pass:
            trace.converged = True
            if cfg.stop_on_convergence:
                break
    return state.to_profile(), trace


def fig_run(topo: Topology, params: ModelParams, cfg: RunConfig) -> tuple[DecisionProfile, IterationTrace]:
    """Colour-synchronised IG: all UEs of one colour best-respond together against the same snapshot."""
    classes = [[topo.ue_index[u] for u in group] for group in greedy_color(conflict_graph(topo)).classes()]
    state = _initial_state(topo, params)
    trace = IterationTrace("fig")
    streak = updates = 0
    for t in range(1, cfg.max_iterations + 1):
        group = classes[(t - 1) % len(classes)]
        moves = [_argmax_response(state, i)[:2] for i in group]
        changed = False
        for i, (b, k) in zip(group, moves):
            changed |= state.apply(i, b, k)
        updates += len(group)
        trace.record(state, t, updates, changed)
        streak = 0 if changed else streak + 1
        if streak >= len(classes):
            trace.converged = True
            if cfg.stop_on_convergence:
                break
    return state.to_profile(), trace


# --- simulated annealing ---------------------------------------------------


def _log_linear_choice(profits: np.ndarray, beta: float, rng: np.random.Generator) -> int:
    if math.isinf(beta):
        best = np.flatnonzero(profits >= profits.max() - TIE_TOL)
        return int(best[rng.integers(len(best))])
    z = beta * (profits - profits.max())
    w = np.exp(z)
    w /= w.sum()
    return int(min(np.searchsorted(np.cumsum(w), rng.random(), side="right"), len(w) - 1))


def sa_run(topo: Topology, params: ModelParams, cfg: RunConfig) -> tuple[DecisionProfile, IterationTrace]:
    """Log-linear learning with a rising inverse temperature; runs all ``max_iterations``."""
    state = _initial_state(topo, params)
    trace = IterationTrace("sa")
    rng = np.random.default_rng(cfg.seed)
    n = len(topo.ues)
    for t in range(1, cfg.max_iterations + 1):
        i = (t - 1) % n if cfg.selection == "round_robin" else int(rng.integers(n))
        cands = state.candidates(i)
        profits = np.array([state.local_profit(i, b, k) for b, k in cands])
        b, k = cands[_log_linear_choice(profits, cfg.beta(t - 1), rng)]
        changed = state.apply(i, b, k)
        trace.record(state, t, t, changed)
    return state.to_profile(), trace


# --- load-aware benchmark --------------------------------------------------


def la_associate(topo: Topology) -> list[int]:
    """Each UE, in id order, joins the eligible FBS currently serving the fewest UEs."""
    count = [0] * len(topo.fbs)
    assoc = []
    for i in sorted(range(len(topo.ues)), key=lambda j: topo.ue_ids[j]):
        b = min(topo.elig_idx[i], key=lambda c: (count[c], topo.fbs_ids[c]))
        count[b] += 1
        assoc.append((i, b))
    out = [-1] * len(topo.ues)
    for i, b in assoc:
        out[i] = b
    return out


def la_schedule(topo: Topology, params: ModelParams, assoc: list[int], load: list[int]) -> list[int]:
    """One scheduling sweep given the other FBSs' gross probabilities in ``load``.

    GBR UEs (id order) get the smallest level meeting their rate under the
    current interference, or nothing if it does not fit; the remaining mass
    is split equally among the Non-GBR UEs, rounded down to a level.
    """
    denom = params.denom
    level = [0] * len(assoc)
    served: dict[int, list[int]] = {}
    for i in sorted(range(len(assoc)), key=lambda j: topo.ue_ids[j]):
        served.setdefault(assoc[i], []).append(i)
    for b, members in served.items():
        budget = denom
        elastic = []
        for i in members:
            if not topo.is_gbr[i]:
                elastic.append(i)
                continue
            factor = 1.0
            for c in topo.elig_idx[i]:
                if c != b:
                    factor *= min(1.0, max(0.0, 1.0 - load[c] / denom))
            for k in range(1, budget + 1):
                if params.R * k / denom * factor >= topo.req[i]:
                    level[i] = k
                    budget -= k
                    break
        if elastic:
            share = budget // len(elastic)
            for i in elastic:
                level[i] = share
    return level


def la_run(topo: Topology, params: ModelParams, cfg: RunConfig) -> tuple[DecisionProfile, IterationTrace]:
    assoc = la_associate(topo)
    trace = IterationTrace("la")
    state = ProfileState(topo, params, assoc, [0] * len(assoc))
    for t in range(1, cfg.max_iterations + 1):
        level = la_schedule(topo, params, assoc, list(state.load))
        changed = level != state.level
        if changed or t == 1:
            state = ProfileState(topo, params, assoc, level)
        trace.record(state, t, t, changed or t == 1)
        if not changed:
            trace.converged = True
            if cfg.stop_on_convergence:
                break
    return state.to_profile(), trace


RUNNERS = {"ig": ig_run, "fig": fig_run, "sa": sa_run, "la": la_run}


def run(topo: Topology, params: ModelParams, cfg: RunConfig) -> tuple[DecisionProfile, IterationTrace]:
    return RUNNERS[cfg.algorithm](topo, params, cfg)
