"""Attach client nodes to service replicas and build update trees."""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from types import MappingProxyType

from .overlay import BroadcastTree, OverlayGraph, broadcast_cover
from .placement import PlacementPlan


class AssignmentError(ValueError):
    pass


@dataclass
class AssignmentMap:
    """``by_service[name][client] -> replica``; hosts map to themselves."""

    by_service: dict[str, dict[str, str]] = field(default_factory=dict)
    unassigned: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def replica_of(self, service: str, client: str) -> str | None:
        return self.by_service.get(service, {}).get(client)

    def clients_of(self, service: str, replica: str) -> list[str]:
        return sorted(c for c, r in self.by_service.get(service, {}).items() if r == replica)

    def load_counts(self, service: str) -> dict[str, int]:
        counts: dict[str, int] = {}
        for r in self.by_service.get(service, {}).values():
            counts[r] = counts.get(r, 0) + 1
        return counts


def default_cap(total_clients: int, replicas: int) -> int:
    return math.ceil(total_clients / replicas) + 1


def assign_clients(
    plan: PlacementPlan,
    g: OverlayGraph,
    caps: Mapping[str, int | None] | None = None,
    *,
    clients: Iterable[str] | None = None,
    strict: bool = True,
) -> AssignmentMap:
    """Nearest-replica association with per-replica capacity caps.

    Hosts first claim one slot of their own replica.  Remaining clients, in
    ascending id order, take the minimum-hop replica that still has room,
    ties to the smaller replica id.  A replica's cap is the smallest of the
    node's ``caps`` entry (default ``ceil(clients / replicas) + 1``) and the
    plan quota.

    With ``strict=False`` clients that cannot be served are listed in
    ``unassigned`` instead of raising.
    """
    caps = caps or {}
    if clients is None:
        clients = [n for n in g.ids if not g.profiles[n].external]
    clients = sorted(clients)
    result = AssignmentMap()
    for name in plan.services:
        replicas = sorted(h for h in plan.hosts[name] if h in g)
        mapping: dict[str, str] = {}
        left: dict[str, int] = {}
        for r in replicas:
            cap = caps.get(r)
            if cap is None:
                cap = default_cap(len(clients), len(replicas))
            q = plan.replica_quota(name, r)
            if q is not None:
                cap = min(cap, q)
            left[r] = cap
        for r in replicas:
            if r in clients and left[r] > 0:
                mapping[r] = r
                left[r] -= 1
        missing = []
        for c in clients:
            if c in mapping:
                continue
            best = None
            reachable = False
            for r in replicas:
                d = g.hop_distance(c, r)
                if d is None:
                    continue
                reachable = True
                if left[r] <= 0:
                    continue
                if best is None or (d, r) < best:
                    best = (d, r)
            if best is None:
                if strict:
                    if not reachable:
                        raise AssignmentError(f"{name}: no replica reachable from {c!r}")
                    raise AssignmentError(f"{name}: service capacity exhausted at client {c!r}")
                missing.append(c)
                continue
            mapping[c] = best[1]
            left[best[1]] -= 1
        result.by_service[name] = dict(sorted(mapping.items()))
        if missing:
            result.unassigned[name] = tuple(missing)
    return result


def build_dissemination_tree(g: OverlayGraph, replica: str, clients: Iterable[str]) -> BroadcastTree:
    """The replica's BFS tree pruned to the branches that reach ``clients``."""
    full = broadcast_cover(g, replica)
    keep = {replica}
    for c in sorted(set(clients)):
        if c not in full.parent:
            raise AssignmentError(f"client {c!r} unreachable from replica {replica!r}")
        node = c
        while node is not None and node not in keep:
            keep.add(node)
            node = full.parent[node]
    parent = {n: full.parent[n] for n in sorted(keep)}
    depth = {n: full.depth[n] for n in sorted(keep)}
    return BroadcastTree(root=replica, parent=MappingProxyType(parent), depth=MappingProxyType(depth))
