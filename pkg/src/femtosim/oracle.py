"""Ground-truth checks for small instances.

``exhaustive_optimum`` evaluates the potential of every joint profile with
array broadcasting (one axis per UE), independently of the incremental
evaluator used by the search algorithms. ``simulate_tiles`` samples the
per-tile random access protocol directly instead of using its closed-form
expected rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from femtosim.model import Decision, DecisionProfile, ModelParams
from femtosim.topology import Topology

DEFAULT_LIMIT = 10**7


@dataclass
class ExhaustiveResult:
    best_profile: DecisionProfile
    best_potential: float
    equilibria: list[DecisionProfile]
    n_profiles: int

    def is_equilibrium(self, profile: DecisionProfile) -> bool:
        return profile in self.equilibria


def _candidates(topo: Topology, params: ModelParams) -> list[list[tuple[int, int]]]:
    return [[(b, k) for b in topo.elig_idx[i] for k in range(params.n)] for i in range(len(topo.ues))]


def potential_tensor(topo: Topology, params: ModelParams) -> tuple[np.ndarray, list[list[tuple[int, int]]]]:
    """Potential of every profile; axis ``i`` enumerates UE ``i``'s candidates."""
    cands = _candidates(topo, params)
    m, nb, denom = len(cands), len(topo.fbs), params.denom

    def along(i, values):
        shape = [1] * m
        shape[i] = len(values)
        return np.asarray(values, dtype=float).reshape(shape)

    serving = [along(i, [b for b, _ in c]) for i, c in enumerate(cands)]
    levels = [along(i, [k for _, k in c]) for i, c in enumerate(cands)]
    load = [sum(levels[i] * (serving[i] == b) for i in range(m)) / denom for b in range(nb)]
    active = [sum((serving[i] == b).astype(float) for i in range(m)) > 0 for b in range(nb)]

    total = 0.0
    for i in range(m):
        rate = params.R * levels[i] / denom
        for b in topo.elig_idx[i]:
            factor = np.clip(1.0 - load[b], 0.0, 1.0)
            rate = rate * np.where(serving[i] == b, 1.0, factor)
        if topo.is_gbr[i]:
            util = np.where(rate >= topo.req[i], params.C1, 0.0)
        else:
            c = topo.req[i]
            util = np.where(rate >= c, params.C2, params.C2 * np.log1p(np.minimum(rate, c)) / math.log1p(c))
        total = total + util
    for b in range(nb):
        power = params.E1 + params.E2 * active[b] + params.E3 * load[b]
        total = total - params.omega * power + np.where(load[b] > 1.0, -params.C3 * (load[b] - 1.0), 0.0)
    shape = tuple(len(c) for c in cands)
    return np.broadcast_to(total, shape).astype(float), cands


def _profile_at(index: tuple[int, ...], cands, topo: Topology, params: ModelParams) -> DecisionProfile:
    return DecisionProfile(
        {u: Decision(topo.fbs_ids[cands[i][j][0]], cands[i][j][1]) for i, (u, j) in enumerate(zip(topo.ue_ids, index))},
        params.n,
    )


def exhaustive_optimum(topo: Topology, params: ModelParams, limit: int = DEFAULT_LIMIT, tol: float = 1e-9) -> ExhaustiveResult:
    """Global maximiser of the potential and every pure Nash equilibrium.

    A profile is an equilibrium when no single UE can raise the potential by
    switching candidates, which for an exact potential game is the same as
    not being able to raise its own local profit.
    """
    size = math.prod(len(topo.eligible[u]) * params.n for u in topo.ue_ids)
    if size > limit:
        raise ValueError(f"state space has {size} profiles, above the limit of {limit}")
    pot, cands = potential_tensor(topo, params)
    best_index = np.unravel_index(int(np.argmax(pot)), pot.shape)
    stable = np.ones(pot.shape, dtype=bool)
    for axis in range(pot.ndim):
        stable &= pot >= pot.max(axis=axis, keepdims=True) - tol
    equilibria = [_profile_at(tuple(int(j) for j in idx), cands, topo, params) for idx in np.argwhere(stable)]
    return ExhaustiveResult(
        _profile_at(tuple(int(j) for j in best_index), cands, topo, params),
        float(pot[best_index]),
        equilibria,
        size,
    )


# --- tile-level Monte Carlo ------------------------------------------------


@dataclass
class TileSimResult:
    rates: dict[int, float]
    stderr: dict[int, float]
    trials: int


def simulate_tiles(
    profile: DecisionProfile, topo: Topology, R: float, trials: int, seed: int | np.random.SeedSequence = 0, chunk: int = 250_000
) -> TileSimResult:
    """Sample ``trials`` tiles and count, per UE, the tiles it receives without collision.

    Per tile every FBS draws one uniform number: it stays silent when the
    draw exceeds its gross probability, otherwise the draw falls into the
    slot of exactly one of its UEs (slot widths are the access probabilities).
    """
    profile.validate(topo)
    denom = profile.levels - 1
    nb = len(topo.fbs)
    lo = np.zeros(len(topo.ues))
    hi = np.zeros(len(topo.ues))
    serving = np.full(len(topo.ues), -1)
    fill = [0] * nb
    for i, u in enumerate(topo.ue_ids):
        d = profile[u]
        if d.fbs is None:
            raise ValueError(f"UE {u} is unassociated")
        b = topo.fbs_index[d.fbs]
        serving[i] = b
        lo[i] = fill[b] / denom
        fill[b] += d.k
        hi[i] = fill[b] / denom
    for b, total in enumerate(fill):
        if total > denom:
            raise ValueError(f"FBS {topo.fbs_ids[b]} has gross probability {total}/{denom} > 1")
    gross = np.array(fill) / denom

    rng = np.random.default_rng(seed)
    hits = np.zeros(len(topo.ues), dtype=np.int64)
    done = 0
    while done < trials:
        size = min(chunk, trials - done)
        draw = rng.random((size, nb))
        silent = draw >= gross
        for i in range(len(topo.ues)):
            b = serving[i]
            got = (draw[:, b] >= lo[i]) & (draw[:, b] < hi[i])
            for c in topo.elig_idx[i]:
                if c != b:
                    got &= silent[:, c]
            hits[i] += int(got.sum())
        done += size

    freq = hits / trials
    rates = {u: float(R * f) for u, f in zip(topo.ue_ids, freq)}
    stderr = {u: float(R * math.sqrt(f * (1 - f) / trials)) for u, f in zip(topo.ue_ids, freq)}
    return TileSimResult(rates, stderr, trials)
