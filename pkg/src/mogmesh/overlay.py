"""Wireless mesh overlay: geometric connectivity, multi-hop routes, churn."""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, replace
from types import MappingProxyType

import numpy as np

from . import kernels
from .model import NodeProfile, Position


class UnknownNodeError(KeyError):
    pass


@dataclass(frozen=True)
class Join:
    profile: NodeProfile


@dataclass(frozen=True)
class Leave:
    node_id: str


@dataclass(frozen=True)
class Move:
    node_id: str
    position: Position


OverlayEvent = Join | Leave | Move


def _weighted_edges(ps: list[NodeProfile], long_range_hop_cost: int) -> dict[tuple[int, int], int]:
    pairs = kernels.geometric_edges(
        np.array([p.position.x for p in ps], dtype=np.float64),
        np.array([p.position.y for p in ps], dtype=np.float64),
        np.array([p.radio_range for p in ps], dtype=np.float64),
        np.array([not p.external for p in ps], dtype=np.uint8),
    )
    weighted = {(int(i), int(j)): 1 for i, j in pairs}
    externals = [k for k, p in enumerate(ps) if p.external]
    if externals:
        for k, p in enumerate(ps):
            if p.external or not p.has_long_range():
                continue
            for e in externals:
                weighted[(min(k, e), max(k, e))] = long_range_hop_cost
    return weighted


def mesh_edges(profiles: Iterable[NodeProfile], long_range_hop_cost: int = 1) -> frozenset[tuple[str, str]]:
    """Edge set ``build_mesh`` would produce, without computing routes."""
    ps = sorted(profiles, key=lambda p: p.node_id)
    ids = [p.node_id for p in ps]
    return frozenset((ids[i], ids[j]) for i, j in _weighted_edges(ps, long_range_hop_cost))


class OverlayGraph:
    """Immutable mesh value with all-pairs minimum-hop routing tables.

    Node ids are ordered ascending; that order drives every tie-break.
    External nodes take no part in the radio-range rule; instead they link to
    every node owning a long-range interface, each such edge costing
    ``long_range_hop_cost`` hops.
    """

    __slots__ = ("ids", "profiles", "edges", "long_range_hop_cost", "_index", "_adj", "_dist", "_hop", "_parent")

    def __init__(self, profiles: Iterable[NodeProfile], long_range_hop_cost: int = 1):
        profiles = list(profiles)
        by_id: dict[str, NodeProfile] = {}
        for p in profiles:
            if p.node_id in by_id:
                raise ValueError(f"duplicate node id {p.node_id!r}")
            by_id[p.node_id] = p
        if long_range_hop_cost < 1 or int(long_range_hop_cost) != long_range_hop_cost:
            raise ValueError("long_range_hop_cost must be a positive integer")
        ids = tuple(sorted(by_id))
        self.ids = ids
        self.profiles = MappingProxyType({i: by_id[i] for i in ids})
        self.long_range_hop_cost = int(long_range_hop_cost)
        self._index = {node: k for k, node in enumerate(ids)}

        n = len(ids)
        weighted = _weighted_edges([by_id[i] for i in ids], self.long_range_hop_cost)

        adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for (i, j), w in weighted.items():
            adj[i].append((j, w))
            adj[j].append((i, w))
        indptr = np.zeros(n + 1, dtype=np.int32)
        indices, weights = [], []
        for i in range(n):
            adj[i].sort()
            for j, w in adj[i]:
                indices.append(j)
                weights.append(w)
            indptr[i + 1] = len(indices)
        self._adj = tuple(tuple(ids[j] for j, _ in row) for row in adj)
        self.edges = frozenset((ids[i], ids[j]) for i, j in weighted)
        dist, hop, parent = kernels.all_pairs_routes(
            indptr, np.array(indices, dtype=np.int32), np.array(weights, dtype=np.int32)
        )
        for arr in (dist, hop, parent):
            arr.setflags(write=False)
        self._dist, self._hop, self._parent = dist, hop, parent

    # -- queries -------------------------------------------------------------

    def __contains__(self, node_id) -> bool:
        return node_id in self._index

    def __len__(self) -> int:
        return len(self.ids)

    def __eq__(self, other) -> bool:
        if not isinstance(other, OverlayGraph):
            return NotImplemented
        return (
            self.ids == other.ids
            and dict(self.profiles) == dict(other.profiles)
            and self.edges == other.edges
            and self.long_range_hop_cost == other.long_range_hop_cost
            and np.array_equal(self._dist, other._dist)
            and np.array_equal(self._hop, other._hop)
            and np.array_equal(self._parent, other._parent)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"OverlayGraph(nodes={len(self.ids)}, edges={len(self.edges)})"

    def index(self, node_id: str) -> int:
        try:
            return self._index[node_id]
        except KeyError:
            raise UnknownNodeError(f"unknown node {node_id!r}") from None

    def neighbors(self, node_id: str) -> tuple[str, ...]:
        return self._adj[self.index(node_id)]

    def has_edge(self, u: str, v: str) -> bool:
        return (min(u, v), max(u, v)) in self.edges

    def hop_distance(self, a: str, b: str) -> int | None:
        d = int(self._dist[self.index(a), self.index(b)])
        return None if d < 0 else d

    def next_hop(self, src: str, dst: str) -> str | None:
        h = int(self._hop[self.index(src), self.index(dst)])
        return None if h < 0 else self.ids[h]

    def routing_table(self, node_id: str) -> dict[str, str]:
        """Next hop per reachable destination (self excluded)."""
        i = self.index(node_id)
        row = self._hop[i]
        return {self.ids[j]: self.ids[h] for j, h in enumerate(row) if h >= 0 and j != i}

    def route(self, src: str, dst: str) -> list[str] | None:
        """Node sequence from ``src`` to ``dst`` following next-hop pointers."""
        if self.hop_distance(src, dst) is None:
            return None
        path = [src]
        while path[-1] != dst:
            path.append(self.next_hop(path[-1], dst))
        return path

    def parent_row(self, root: str) -> dict[str, str | None]:
        i = self.index(root)
        out: dict[str, str | None] = {}
        for j, node in enumerate(self.ids):
            if self._dist[i, j] >= 0:
                p = int(self._parent[i, j])
                out[node] = None if p < 0 else self.ids[p]
        return out

    def hop_matrix(self) -> np.ndarray:
        """Read-only ``n x n`` hop counts in ``ids`` order, ``-1`` if unreachable."""
        return self._dist

    def components(self) -> list[tuple[str, ...]]:
        """Connected components, each sorted, ordered by smallest member."""
        seen: set[int] = set()
        out = []
        for i in range(len(self.ids)):
            if i in seen:
                continue
            members = [j for j in range(len(self.ids)) if self._dist[i, j] >= 0]
            seen.update(members)
            out.append(tuple(self.ids[j] for j in members))
        return out

    def with_profiles(self, profiles: Iterable[NodeProfile]) -> OverlayGraph:
        return OverlayGraph(profiles, self.long_range_hop_cost)


def build_mesh(profiles: Iterable[NodeProfile], long_range_hop_cost: int = 1) -> OverlayGraph:
    return OverlayGraph(profiles, long_range_hop_cost)


def hop_distance(g: OverlayGraph, a: str, b: str) -> int | None:
    """Minimum hop count, or ``None`` when ``b`` is unreachable from ``a``."""
    return g.hop_distance(a, b)


def reconfigure(g: OverlayGraph, ev: OverlayEvent) -> OverlayGraph:
    """Apply one churn or mobility event; the result equals a fresh build."""
    profiles = dict(g.profiles)
    if isinstance(ev, Join):
        if ev.profile.node_id in profiles:
            raise ValueError(f"duplicate node id {ev.profile.node_id!r}")
        profiles[ev.profile.node_id] = ev.profile
    elif isinstance(ev, Leave):
        if ev.node_id not in profiles:
            raise UnknownNodeError(f"unknown node {ev.node_id!r}")
        del profiles[ev.node_id]
    elif isinstance(ev, Move):
        if ev.node_id not in profiles:
            raise UnknownNodeError(f"unknown node {ev.node_id!r}")
        profiles[ev.node_id] = replace(profiles[ev.node_id], position=ev.position)
    else:
        raise TypeError(f"not an overlay event: {ev!r}")
    return g.with_profiles(profiles.values())


@dataclass(frozen=True)
class BroadcastTree:
    root: str
    parent: Mapping[str, str | None]
    depth: Mapping[str, int]

    def children(self, node: str) -> tuple[str, ...]:
        return tuple(sorted(c for c, p in self.parent.items() if p == node))

    def nodes(self) -> tuple[str, ...]:
        return tuple(sorted(self.parent))

    def edges(self) -> frozenset[tuple[str, str]]:
        return frozenset((p, c) for c, p in self.parent.items() if p is not None)

    def max_depth(self) -> int:
        return max(self.depth.values())


def broadcast_cover(g: OverlayGraph, root: str) -> BroadcastTree:
    """BFS tree from ``root`` spanning its connected component."""
    parent = g.parent_row(root)
    depth = {node: g.hop_distance(root, node) for node in parent}
    return BroadcastTree(root=root, parent=MappingProxyType(parent), depth=MappingProxyType(depth))
