"""Utility, throughput, power and potential functions of the femtocell game.

Access probabilities are kept as integer levels ``k`` over the shared
denominator ``n - 1``; gross transmission probabilities are the integer
sums of those levels, so comparisons on them are exact. Utilities and
power are evaluated in floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING, Mapping, Sequence

if TYPE_CHECKING:
    from femtosim.topology import Topology


@dataclass(frozen=True)
class GBR:
    """Guaranteed-bit-rate bearer with required rate ``d`` (Mbps)."""

    d: float

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError(f"GBR rate requirement must be positive, got {self.d}")

    @property
    def rate(self) -> float:
        return self.d


@dataclass(frozen=True)
class NonGBR:
    """Elastic bearer whose rate is capped at ``c`` (Mbps)."""

    c: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"Non-GBR rate cap must be positive, got {self.c}")

    @property
    def rate(self) -> float:
        return self.c


BearerClass = GBR | NonGBR


@dataclass(frozen=True)
class ModelParams:
    R: float = 100.0
    n: int = 10
    C1: float = 100.0
    C2: float = 10.0
    C3: float = 100.0
    E1: float = 0.7
    E2: float = 6.7
    E3: float = 2.7
    omega: float = 1.0

    def __post_init__(self):
        for name in ("R", "C1", "C2", "C3", "E1", "E2", "E3"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and value > 0):
                raise ValueError(f"{name} must be strictly positive, got {value!r}")
        if not isinstance(self.n, int) or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n!r}")
        if not self.omega >= 0:
            raise ValueError(f"omega must be non-negative, got {self.omega!r}")
        if not self.C1 > self.C2:
            raise ValueError(f"C1 must exceed C2 (GBR priority), got C1={self.C1}, C2={self.C2}")
        if self.C3 < self.C1:
            raise ValueError(f"C3 must be at least C1 (penalty dominance), got C3={self.C3}, C1={self.C1}")

    @property
    def denom(self) -> int:
        return self.n - 1

    def levels(self) -> range:
        return range(self.n)

    def q(self, k: int) -> Fraction:
        return Fraction(k, self.n - 1)


@dataclass(frozen=True, order=True)
class Decision:
    """Association (FBS id, or None while unassociated) plus access level ``k``."""

    fbs: int | None
    k: int = 0

    def __post_init__(self):
        if self.k < 0:
            raise ValueError(f"access level must be >= 0, got {self.k}")
        if self.fbs is None and self.k != 0:
            raise ValueError("an unassociated UE must have zero access probability")

    @property
    def associated(self) -> bool:
        return self.fbs is not None


UNASSOCIATED = Decision(None, 0)


class DecisionProfile(Mapping[int, Decision]):
    """Immutable joint decision of every UE, keyed by UE id."""

    __slots__ = ("_decisions", "levels")

    def __init__(self, decisions: Mapping[int, Decision], levels: int):
        self._decisions = dict(decisions)
        self.levels = levels
        for u, d in self._decisions.items():
            if d.k > levels - 1:
                raise ValueError(f"UE {u}: access level {d.k} exceeds n-1={levels - 1}")

    @classmethod
    def unassociated(cls, topo: Topology, levels: int) -> DecisionProfile:
        return cls({u: UNASSOCIATED for u in topo.ue_ids}, levels)

    def __getitem__(self, u: int) -> Decision:
        return self._decisions[u]

    def __iter__(self):
        return iter(self._decisions)

    def __len__(self) -> int:
        return len(self._decisions)

    def __eq__(self, other) -> bool:
        if isinstance(other, DecisionProfile):
            return self.levels == other.levels and self._decisions == other._decisions
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.levels, tuple(sorted(self._decisions.items(), key=lambda kv: kv[0]))))

    def __repr__(self) -> str:
        body = ", ".join(f"{u}: ({d.fbs}, {d.k}/{self.levels - 1})" for u, d in sorted(self._decisions.items()))
        return f"DecisionProfile({{{body}}})"

    def q(self, u: int) -> Fraction:
        return Fraction(self._decisions[u].k, self.levels - 1)

    def replace(self, u: int, decision: Decision) -> DecisionProfile:
        if u not in self._decisions:
            raise KeyError(f"unknown UE id {u}")
        new = dict(self._decisions)
        new[u] = decision
        return DecisionProfile(new, self.levels)

    def validate(self, topo: Topology) -> None:
        if set(self._decisions) != set(topo.ue_ids):
            missing = set(topo.ue_ids) - set(self._decisions)
            extra = set(self._decisions) - set(topo.ue_ids)
            raise ValueError(f"profile does not match topology UEs (missing={sorted(missing)}, extra={sorted(extra)})")
        for u, d in self._decisions.items():
            if d.fbs is not None and d.fbs not in topo.eligible[u]:
                raise ValueError(f"UE {u} is not covered by FBS {d.fbs}")


# --- scalar formulas -------------------------------------------------------


def utility_gbr(r: float, d: float, C1: float) -> float:
    if r < 0 or d <= 0:
        raise ValueError(f"invalid GBR utility inputs r={r}, d={d}")
    return C1 if r >= d else 0.0


def utility_non_gbr(r: float, c: float, C2: float, log=math.log) -> float:
    """Log utility capped at ``C2``; ``log`` may be any logarithm (the ratio is base-free)."""
    if r < 0 or c <= 0:
        raise ValueError(f"invalid Non-GBR utility inputs r={r}, c={c}")
    if r >= c:
        return C2
    return C2 * log(r + 1.0) / log(c + 1.0)


def bearer_utility(r: float, bearer: BearerClass, params: ModelParams) -> float:
    if isinstance(bearer, GBR):
        return utility_gbr(r, bearer.d, params.C1)
    return utility_non_gbr(r, bearer.c, params.C2)


def penalty(x: float, C3: float) -> float:
    return 0.0 if x <= 0 else -C3 * x


def power_from_load(active: bool, load: float, params: ModelParams) -> float:
    return params.E1 + (params.E2 if active else 0.0) + params.E3 * load


# --- fast mutable evaluator ------------------------------------------------


class ProfileState:
    """Index-based mutable view of a profile used by the search algorithms.

    ``assoc[i]`` is the FBS index serving UE index ``i`` (``-1`` when
    unassociated), ``level[i]`` its access level, ``load[b]`` the integer sum
    of levels served by FBS ``b`` and ``count[b]`` the number of UEs it serves.
    """

    def __init__(self, topo: Topology, params: ModelParams, assoc: Sequence[int], level: Sequence[int]):
        self.topo = topo
        self.params = params
        self.assoc = list(assoc)
        self.level = list(level)
        nb = len(topo.fbs)
        self.load = [0] * nb
        self.count = [0] * nb
        for i, b in enumerate(self.assoc):
            if b >= 0:
                self.load[b] += self.level[i]
                self.count[b] += 1
        self._utility = [self._ue_utility(i, None) for i in range(len(self.assoc))]

    @classmethod
    def from_profile(cls, profile: DecisionProfile, topo: Topology, params: ModelParams) -> ProfileState:
        if profile.levels != params.n:
            raise ValueError(f"profile uses n={profile.levels} levels but params.n={params.n}")
        profile.validate(topo)
        assoc, level = [], []
        for u in topo.ue_ids:
            d = profile[u]
            assoc.append(-1 if d.fbs is None else topo.fbs_index[d.fbs])
            level.append(d.k)
        return cls(topo, params, assoc, level)

    def to_profile(self) -> DecisionProfile:
        topo = self.topo
        return DecisionProfile(
            {
                u: Decision(None if b < 0 else topo.fbs_ids[b], k)
                for u, b, k in zip(topo.ue_ids, self.assoc, self.level)
            },
            self.params.n,
        )

    def copy(self) -> ProfileState:
        return ProfileState(self.topo, self.params, self.assoc, self.level)

    def decision_key(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return tuple(self.assoc), tuple(self.level)

    # -- rates and utilities

    def _factor(self, load: int) -> float:
        return min(1.0, max(0.0, 1.0 - load / self.params.denom))

    def _rate(self, i: int, override: dict[int, int] | None, own: tuple[int, int] | None) -> float:
        b_own, k_own = own if own is not None else (self.assoc[i], self.level[i])
        if b_own < 0 or k_own == 0:
            return 0.0
        p = self.params
        r = p.R * k_own / p.denom
        for b in self.topo.elig_idx[i]:
            if b == b_own:
                continue
            load = override[b] if override is not None and b in override else self.load[b]
            if load:
                r *= self._factor(load)
        return r

    def _ue_utility(self, i: int, override, own=None) -> float:
        r = self._rate(i, override, own)
        if self.topo.is_gbr[i]:
            return self.params.C1 if r >= self.topo.req[i] else 0.0
        c = self.topo.req[i]
        if r >= c:
            return self.params.C2
        return self.params.C2 * math.log(r + 1.0) / math.log(c + 1.0)

    def rate(self, i: int) -> float:
        return self._rate(i, None, None)

    def fbs_power(self, b: int) -> float:
        p = self.params
        return p.E1 + (p.E2 if self.count[b] else 0.0) + p.E3 * self.load[b] / p.denom

    def fbs_penalty(self, b: int) -> float:
        excess = self.load[b] - self.params.denom
        return 0.0 if excess <= 0 else -self.params.C3 * excess / self.params.denom

    # -- aggregates

    def total_utility(self) -> float:
        return math.fsum(self._utility)

    def total_power(self) -> float:
        return math.fsum(self.fbs_power(b) for b in range(len(self.load)))

    def potential(self) -> float:
        p = self.params
        nb = len(self.load)
        return math.fsum(
            list(self._utility)
            + [-p.omega * self.fbs_power(b) for b in range(nb)]
            + [self.fbs_penalty(b) for b in range(nb)]
        )

    def active_fbs(self) -> int:
        return sum(1 for c in self.count if c)

    def utility_of(self, i: int) -> float:
        return self._utility[i]

    # -- local profit

    def local_profit(self, i: int, b_new: int, k_new: int) -> float:
        """Local profit of UE ``i`` if it switched to ``(b_new, k_new)``; ``b_new=-1`` means unassociated."""
        p = self.params
        b_old, k_old = self.assoc[i], self.level[i]
        elig = self.topo.elig_idx[i]
        load: dict[int, int] = {b: self.load[b] for b in elig}
        count: dict[int, int] = {b: self.count[b] for b in elig}
        if b_old >= 0:
            load[b_old] -= k_old
            count[b_old] -= 1
        if b_new >= 0:
            load[b_new] += k_new
            count[b_new] += 1
        total = 0.0
        for v in self.topo.alpha1_idx[i]:
            if v == i:
                total += self._ue_utility(v, load, (b_new, k_new))
            else:
                total += self._ue_utility(v, load)
        denom = p.denom
        for b in elig:
            total -= p.omega * (p.E1 + (p.E2 if count[b] else 0.0) + p.E3 * load[b] / denom)
            excess = load[b] - denom
            if excess > 0:
                total -= p.C3 * excess / denom
        return total

    def candidates(self, i: int) -> list[tuple[int, int]]:
        return [(b, k) for b in self.topo.elig_idx[i] for k in range(self.params.n)]

    def apply(self, i: int, b_new: int, k_new: int) -> bool:
        """Commit a decision for UE ``i``; returns whether it changed."""
        b_old, k_old = self.assoc[i], self.level[i]
        if (b_old, k_old) == (b_new, k_new):
            return False
        if b_old >= 0:
            self.load[b_old] -= k_old
            self.count[b_old] -= 1
        if b_new >= 0:
            self.load[b_new] += k_new
            self.count[b_new] += 1
        self.assoc[i] = b_new
        self.level[i] = k_new
        for v in self.topo.alpha1_idx[i]:
            self._utility[v] = self._ue_utility(v, None)
        return True


# --- profile-level pure functions ------------------------------------------


def gross_probability(b: int, profile: DecisionProfile, topo: Topology) -> Fraction:
    if b not in topo.fbs_index:
        raise KeyError(f"unknown FBS id {b}")
    total = sum(profile[u].k for u in topo.coverage[b] if profile[u].fbs == b)
    return Fraction(total, profile.levels - 1)


def throughput(u: int, profile: DecisionProfile, topo: Topology, R: float) -> float:
    if u not in topo.ue_index:
        raise KeyError(f"unknown UE id {u}")
    d = profile[u]
    if d.fbs is None or d.k == 0:
        return 0.0
    rate = R * d.k / (profile.levels - 1)
    for b in topo.eligible[u]:
        if b == d.fbs:
            continue
        load = gross_probability(b, profile, topo)
        rate *= float(min(Fraction(1), max(Fraction(0), 1 - load)))
    return rate


def fbs_power(b: int, profile: DecisionProfile, topo: Topology, params: ModelParams) -> float:
    if b not in topo.fbs_index:
        raise KeyError(f"unknown FBS id {b}")
    active = any(profile[u].fbs == b for u in topo.coverage[b])
    return power_from_load(active, float(gross_probability(b, profile, topo)), params)


def global_potential(profile: DecisionProfile, topo: Topology, params: ModelParams) -> float:
    """Total utility minus weighted network power plus overload penalties."""
    terms = [bearer_utility(throughput(u, profile, topo, params.R), topo.bearer[u], params) for u in topo.ue_ids]
    for b in topo.fbs_ids:
        terms.append(-params.omega * fbs_power(b, profile, topo, params))
        terms.append(penalty(float(gross_probability(b, profile, topo) - 1), params.C3))
    return math.fsum(terms)


def local_profit(
    u: int, candidate: Decision, profile: DecisionProfile, topo: Topology, params: ModelParams
) -> float:
    """Neighbourhood utility minus local power and penalty with ``u`` playing ``candidate``."""
    if u not in topo.ue_index:
        raise KeyError(f"unknown UE id {u}")
    if candidate.fbs is not None and candidate.fbs not in topo.eligible[u]:
        raise ValueError(f"FBS {candidate.fbs} does not cover UE {u}")
    if candidate.k > params.n - 1:
        raise ValueError(f"access level {candidate.k} outside Q for n={params.n}")
    trial = profile.replace(u, candidate)
    terms = [
        bearer_utility(throughput(v, trial, topo, params.R), topo.bearer[v], params) for v in sorted(topo.alpha1[u])
    ]
    for b in topo.eligible[u]:
        terms.append(-params.omega * fbs_power(b, trial, topo, params))
        terms.append(penalty(float(gross_probability(b, trial, topo) - 1), params.C3))
    return math.fsum(terms)


def gbr_rejections(state: ProfileState) -> tuple[int, int]:
    """(rejected, total) GBR UEs under ``state``."""
    topo = state.topo
    total = rejected = 0
    for i in range(len(state.assoc)):
        if topo.is_gbr[i]:
            total += 1
            if state.rate(i) < topo.req[i]:
                rejected += 1
    return rejected, total


def non_gbr_utility(state: ProfileState) -> float:
    return math.fsum(state.utility_of(i) for i in range(len(state.assoc)) if not state.topo.is_gbr[i])
