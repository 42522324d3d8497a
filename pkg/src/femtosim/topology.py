"""Network instances: FBS/UE geometry, coverage and neighbour sets, and the UE conflict graph."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import yaml

from femtosim.model import GBR, BearerClass, NonGBR

DEFAULT_RANGE = 10.0
DEFAULT_SPACING = 14.0


@dataclass(frozen=True)
class FbsNode:
    id: int
    x: float
    y: float
    range: float = DEFAULT_RANGE

    def __post_init__(self):
        if not self.range > 0:
            raise ValueError(f"FBS {self.id}: range must be positive, got {self.range}")

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class UeNode:
    id: int
    x: float
    y: float
    bearer: BearerClass

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)

    @property
    def is_gbr(self) -> bool:
        return isinstance(self.bearer, GBR)


def covers(fbs: FbsNode, ue: UeNode) -> bool:
    # closed ball; the relative slack only absorbs rounding in the distance itself
    return math.dist(fbs.position, ue.position) <= fbs.range * (1 + 1e-12)


@dataclass(frozen=True, eq=False)
class Topology:
    """Immutable network instance. Build it with :func:`build_topology`."""

    fbs: tuple[FbsNode, ...]
    ues: tuple[UeNode, ...]
    coverage: Mapping[int, frozenset[int]]
    eligible: Mapping[int, tuple[int, ...]]
    alpha1: Mapping[int, frozenset[int]]
    alpha2: Mapping[int, frozenset[int]]
    meta: Mapping[str, object] = field(default_factory=dict)

    @cached_property
    def fbs_ids(self) -> tuple[int, ...]:
        return tuple(b.id for b in self.fbs)

    @cached_property
    def ue_ids(self) -> tuple[int, ...]:
        return tuple(u.id for u in self.ues)

    @cached_property
    def fbs_index(self) -> dict[int, int]:
        return {b: i for i, b in enumerate(self.fbs_ids)}

    @cached_property
    def ue_index(self) -> dict[int, int]:
        return {u: i for i, u in enumerate(self.ue_ids)}

    @cached_property
    def bearer(self) -> dict[int, BearerClass]:
        return {u.id: u.bearer for u in self.ues}

    @property
    def gbr_ids(self) -> list[int]:
        return [u.id for u in self.ues if u.is_gbr]

    @property
    def non_gbr_ids(self) -> list[int]:
        return [u.id for u in self.ues if not u.is_gbr]

    # index-based views used by the hot loops

    @cached_property
    def elig_idx(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(self.fbs_index[b] for b in self.eligible[u]) for u in self.ue_ids)

    @cached_property
    def alpha1_idx(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(sorted(self.ue_index[v] for v in self.alpha1[u])) for u in self.ue_ids)

    @cached_property
    def alpha2_idx(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(sorted(self.ue_index[v] for v in self.alpha2[u])) for u in self.ue_ids)

    @cached_property
    def is_gbr(self) -> tuple[bool, ...]:
        return tuple(u.is_gbr for u in self.ues)

    @cached_property
    def req(self) -> tuple[float, ...]:
        return tuple(u.bearer.rate for u in self.ues)

    def __repr__(self) -> str:
        return f"Topology(|B|={len(self.fbs)}, |U|={len(self.ues)}, |U_G|={len(self.gbr_ids)})"


def build_topology(fbs: Sequence[FbsNode], ues: Sequence[UeNode], meta: Mapping[str, object] | None = None) -> Topology:
    if not fbs or not ues:
        raise ValueError("a topology needs at least one FBS and one UE")
    for kind, ids in (("FBS", [b.id for b in fbs]), ("UE", [u.id for u in ues])):
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate {kind} ids: {sorted(i for i in set(ids) if ids.count(i) > 1)}")

    coverage = {b.id: frozenset(u.id for u in ues if covers(b, u)) for b in fbs}
    eligible = {}
    for u in ues:
        elig = tuple(sorted(b.id for b in fbs if u.id in coverage[b.id]))
        if not elig:
            raise ValueError(f"UE {u.id} at {u.position} is not covered by any FBS")
        eligible[u.id] = elig
    alpha1 = {u.id: frozenset().union(*(coverage[b] for b in eligible[u.id])) for u in ues}
    alpha2 = {u.id: frozenset().union(*(alpha1[v] for v in alpha1[u.id])) for u in ues}
    return Topology(tuple(fbs), tuple(ues), coverage, eligible, alpha1, alpha2, dict(meta or {}))


# --- conflict graph and colouring ------------------------------------------


@dataclass(frozen=True)
class ConflictGraph:
    vertices: tuple[int, ...]
    adjacency: Mapping[int, frozenset[int]]

    @classmethod
    def from_edges(cls, vertices: Iterable[int], edges: Iterable[tuple[int, int]]) -> ConflictGraph:
        vertices = tuple(sorted(vertices))
        adj: dict[int, set[int]] = {v: set() for v in vertices}
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop on vertex {u}")
            adj[u].add(v)
            adj[v].add(u)
        return cls(vertices, {v: frozenset(n) for v, n in adj.items()})

    @property
    def edges(self) -> set[tuple[int, int]]:
        return {(u, v) for u in self.vertices for v in self.adjacency[u] if u < v}

    @property
    def max_degree(self) -> int:
        return max((len(n) for n in self.adjacency.values()), default=0)


@dataclass(frozen=True)
class Coloring:
    color: Mapping[int, int]

    @property
    def num_colors(self) -> int:
        return len(set(self.color.values()))

    def classes(self) -> list[list[int]]:
        """Vertices grouped by colour, in increasing colour order."""
        groups: dict[int, list[int]] = {}
        for v, c in sorted(self.color.items()):
            groups.setdefault(c, []).append(v)
        return [groups[c] for c in sorted(groups)]

    def is_proper(self, graph: ConflictGraph) -> bool:
        return all(self.color[u] != self.color[v] for u, v in graph.edges)


def conflict_graph(topo: Topology) -> ConflictGraph:
    edges = ((u, v) for u in topo.ue_ids for v in topo.alpha2[u] if u < v)
    return ConflictGraph.from_edges(topo.ue_ids, edges)


def greedy_color(graph: ConflictGraph) -> Coloring:
    """Synchronous distributed colour reduction.

    Every vertex starts with its 1-based index as colour. For ``t`` from
    ``|V|`` down to 1, the vertices currently holding colour ``t`` look at
    their neighbours' colours from the previous step and move to the smallest
    free colour if it is smaller than ``t``; otherwise they stop.
    """
    color = {v: i + 1 for i, v in enumerate(graph.vertices)}
    done: set[int] = set()
    for t in range(len(graph.vertices), 0, -1):
        snapshot = dict(color)
        for v in graph.vertices:
            if v in done or snapshot[v] != t:
                continue
            taken = {snapshot[w] for w in graph.adjacency[v]}
            k = 1
            while k in taken:
                k += 1
            if k < snapshot[v]:
                color[v] = k
            else:
                done.add(v)
    return Coloring(color)


# --- scenario generators ---------------------------------------------------


def _bearer_from_record(kind: str, rate: float) -> BearerClass:
    kind = kind.lower().replace("-", "_")
    if kind == "gbr":
        return GBR(float(rate))
    if kind in ("non_gbr", "nongbr"):
        return NonGBR(float(rate))
    raise ValueError(f"unknown bearer class {kind!r} (expected 'gbr' or 'non_gbr')")


def topology_from_dict(data: Mapping) -> Topology:
    unknown = set(data) - {"fbs", "ue", "meta"}
    if unknown:
        raise ValueError(f"unknown topology keys: {sorted(unknown)}")
    try:
        fbs = [FbsNode(int(r["id"]), float(r["x"]), float(r["y"]), float(r.get("range", DEFAULT_RANGE))) for r in data["fbs"]]
        ues = [
            UeNode(int(r["id"]), float(r["x"]), float(r["y"]), _bearer_from_record(str(r["bearer"]), r["d_or_c"]))
            for r in data["ue"]
        ]
    except KeyError as exc:
        raise ValueError(f"topology record missing field {exc}") from None
    return build_topology(fbs, ues, data.get("meta"))


def topology_to_dict(topo: Topology) -> dict:
    return {
        "fbs": [{"id": b.id, "x": b.x, "y": b.y, "range": b.range} for b in topo.fbs],
        "ue": [
            {"id": u.id, "x": u.x, "y": u.y, "bearer": "gbr" if u.is_gbr else "non_gbr", "d_or_c": u.bearer.rate}
            for u in topo.ues
        ],
    }


def load_topology(path: str | Path) -> Topology:
    with open(path) as fh:
        return topology_from_dict(yaml.safe_load(fh))


def save_topology(topo: Topology, path: str | Path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(topology_to_dict(topo), fh, sort_keys=False)


def simple_topology(path: str | Path | None = None) -> Topology:
    """Three mutually overlapping FBSs and eleven UEs (five GBR)."""
    if path is not None:
        return load_topology(path)
    text = resources.files("femtosim.data").joinpath("simple_topology.yaml").read_text()
    return topology_from_dict(yaml.safe_load(text))


def grid_topology(
    rows: int = 5,
    cols: int = 5,
    spacing: float = DEFAULT_SPACING,
    seed: int | np.random.SeedSequence | np.random.Generator = 0,
    *,
    fbs_range: float = DEFAULT_RANGE,
    n_gbr: int = 2,
    n_non_gbr: int = 6,
    d: float = 10.0,
    c: float = 20.0,
    alternate: bool = False,
) -> Topology:
    """FBSs on a ``rows x cols`` grid with UEs dropped in each circle's inscribed square.

    With ``alternate=True`` only cells with even ``row + col`` receive UEs
    (a checkerboard, 13 of 25 cells on a 5x5 grid).
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"grid needs rows, cols >= 1, got {rows}x{cols}")
    if not spacing > 0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    half = fbs_range / math.sqrt(2)
    fbs, ues = [], []
    for r in range(rows):
        for col in range(cols):
            b = FbsNode(len(fbs) + 1, col * spacing, r * spacing, fbs_range)
            fbs.append(b)
            if alternate and (r + col) % 2:
                continue
            offsets = rng.uniform(-half, half, size=(n_gbr + n_non_gbr, 2))
            for j, (dx, dy) in enumerate(offsets):
                bearer = GBR(d) if j < n_gbr else NonGBR(c)
                ues.append(UeNode(len(ues) + 1, b.x + float(dx), b.y + float(dy), bearer))
    meta = {"scenario": "grid", "rows": rows, "cols": cols, "spacing": spacing, "alternate": alternate}
    return build_topology(fbs, ues, meta)
