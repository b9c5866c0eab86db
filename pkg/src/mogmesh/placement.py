"""Placement of distributable game-engine services onto mesh nodes.

Two allocators produce a :class:`PlacementPlan`:

* :func:`allocate_heuristic` ranks nodes by capability and spreads replicas
  by greedy farthest-point selection on hop distance;
* :func:`allocate_auction` runs a uniform-price ascending clock over hosting
  slots and then solves a maximum-cardinality, maximum-score assignment.

Each replica reserves compute for a fixed client quota, ``ceil(clients/k)``;
association later caps every replica at its quota, so the load bound in the
plan holds after clients are attached.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

from .model import CORE_ENGINE, ModuleKind, NodeProfile, PlacementClass, classify_module
from .overlay import OverlayGraph

DEFAULT_WEIGHTS = (1.0, 1.0, 1.0)
_EPS = 1e-9


class PlacementError(ValueError):
    pass


@dataclass(frozen=True)
class ServiceSpec:
    kind: ModuleKind
    workload_per_client: float
    state_bearing: bool | None = None
    name: str = ""

    def __post_init__(self):
        kind = ModuleKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if not self.workload_per_client > 0:
            raise ValueError(f"{kind.value}: workload_per_client must be > 0")
        cls = classify_module(kind)
        if cls in (PlacementClass.MandatoryEverywhere, PlacementClass.ExternalServer):
            raise ValueError(f"{kind.value} is {cls.value} and cannot be placed")
        if self.state_bearing is None:
            object.__setattr__(self, "state_bearing", kind is ModuleKind.GameStateManagement)
        if not self.name:
            object.__setattr__(self, "name", kind.value)

    @property
    def placement_class(self) -> PlacementClass:
        return classify_module(self.kind)

    @property
    def replicable(self) -> bool:
        return self.placement_class is PlacementClass.DistributableReplicable

    @property
    def trusted_only(self) -> bool:
        return self.placement_class is PlacementClass.TrustedNode


@dataclass
class PlacementPlan:
    """Hosts per service (keyed by service name) and per-replica client quotas.

    ``quota[name][host]`` bounds how many clients (the host itself included)
    the replica may serve; ``None`` leaves replicas uncapped by the plan.
    """

    hosts: dict[str, tuple[str, ...]]
    services: dict[str, ServiceSpec]
    quota: dict[str, dict[str, int]] | None = None

    def hosted_on(self, node: str) -> list[str]:
        return [name for name, hs in self.hosts.items() if node in hs]

    def replica_quota(self, name: str, host: str) -> int | None:
        if self.quota is None:
            return None
        return self.quota.get(name, {}).get(host)

    def check(self, g: OverlayGraph | None = None) -> None:
        """Raise ``PlacementError`` if a structural plan invariant is broken."""
        for name, spec in self.services.items():
            hs = self.hosts.get(name, ())
            if not hs:
                raise PlacementError(f"{name}: no host")
            if len(set(hs)) != len(hs):
                raise PlacementError(f"{name}: duplicate host")
            if not spec.replicable and len(hs) != 1 and not _per_component(g, hs):
                raise PlacementError(f"{name}: non-replicable service has {len(hs)} hosts")
            if g is not None:
                for h in hs:
                    if h not in g:
                        raise PlacementError(f"{name}: host {h!r} not in overlay")
                    if spec.trusted_only and not g.profiles[h].trusted:
                        raise PlacementError(f"{name}: host {h!r} is not trusted")
        if set(self.hosts) != set(self.services):
            raise PlacementError("hosts and services disagree")
        if g is not None and self.quota is not None:
            for node in g.ids:
                load = sum(
                    self.quota[name][node] * self.services[name].workload_per_client
                    for name in self.hosted_on(node)
                )
                if load > g.profiles[node].compute + _EPS:
                    raise PlacementError(f"node {node!r} over-committed: {load} > {g.profiles[node].compute}")


def _per_component(g: OverlayGraph | None, hosts: Sequence[str]) -> bool:
    # a non-replicable service may have one host per connected component
    if g is None:
        return False
    comp_of = {}
    for k, comp in enumerate(g.components()):
        for node in comp:
            comp_of[node] = k
    seen = [comp_of[h] for h in hosts]
    return len(set(seen)) == len(seen)


def estimate_replicas(svc: ServiceSpec, clients: int, node_compute: float) -> int:
    """Replica count needed so that no replica exceeds ``node_compute``."""
    if not node_compute > 0:
        raise ValueError("node_compute must be > 0")
    if clients < 0:
        raise ValueError("clients must be >= 0")
    if not svc.replicable:
        return 1
    need = Fraction(clients) * Fraction(svc.workload_per_client) / Fraction(node_compute)
    return max(1, math.ceil(need))


def rank_scores(profiles: Sequence[NodeProfile], weights=DEFAULT_WEIGHTS) -> dict[str, float]:
    wc, wb, wn = weights
    return {
        p.node_id: wc * p.compute + wb * (p.battery if p.battery is not None else math.inf) + wn * p.best_bandwidth()
        for p in profiles
    }


def rank_nodes(profiles: Sequence[NodeProfile], weights=DEFAULT_WEIGHTS) -> list[str]:
    """Node ids by descending capability score, ties by ascending id."""
    profiles = list(profiles)
    if not profiles:
        raise ValueError("no nodes to rank")
    scores = rank_scores(profiles, weights)
    return sorted(scores, key=lambda n: (-scores[n], n))


# -- shared allocation plumbing -------------------------------------------------


@dataclass
class _Group:
    """Services placed together: a single service, or the core engine bundle."""

    members: list[ServiceSpec]
    clients: int = 0

    @property
    def name(self) -> str:
        return "+".join(m.name for m in self.members)

    @property
    def workload(self) -> float:
        return sum(m.workload_per_client for m in self.members)

    @property
    def replicable(self) -> bool:
        return all(m.replicable for m in self.members)

    @property
    def trusted_only(self) -> bool:
        return any(m.trusted_only for m in self.members)

    def as_spec(self) -> ServiceSpec:
        kind = ModuleKind.GameStateManagement if self.replicable else self.members[0].kind
        return ServiceSpec(kind=kind, workload_per_client=self.workload, name=self.name)


def _groups(services: Sequence[ServiceSpec], core_affinity: bool) -> list[_Group]:
    names = [s.name for s in services]
    if len(set(names)) != len(names):
        raise ValueError("duplicate service names")
    core = [s for s in services if s.kind in CORE_ENGINE] if core_affinity else []
    groups = [_Group([s]) for s in services if s not in core]
    if core:
        groups.append(_Group(core))
    return groups


@dataclass
class _Component:
    candidates: list[str]
    clients: dict[str, int] = field(default_factory=dict)


def _components(
    services: Sequence[ServiceSpec], g: OverlayGraph, clients: Mapping[str, int] | None
) -> list[_Component]:
    comps = []
    for comp in g.components():
        cands = [n for n in comp if not g.profiles[n].external]
        if cands:
            comps.append(_Component(cands))
    total = sum(len(c.candidates) for c in comps)
    for c in comps:
        for s in services:
            if clients is None:
                c.clients[s.name] = len(c.candidates)
            elif len(comps) == 1:
                c.clients[s.name] = int(clients.get(s.name, 0))
            else:
                c.clients[s.name] = math.ceil(int(clients.get(s.name, 0)) * len(c.candidates) / total)
    return comps


def _prepare(services, g, clients, core_affinity, reserved):
    services = list(services)
    if not services:
        return services, [], {}
    comps = _components(services, g, clients)
    if not comps:
        raise PlacementError("no candidate hosts")
    reserved = reserved or {}
    residual = {
        n: g.profiles[n].compute - reserved.get(n, 0.0) for c in comps for n in c.candidates
    }
    return services, comps, residual


def _record(hosts, quota, group: _Group, chosen: Sequence[str], per_replica_clients: int):
    for m in group.members:
        hosts.setdefault(m.name, [])
        quota.setdefault(m.name, {})
        for n in chosen:
            hosts[m.name].append(n)
            quota[m.name][n] = per_replica_clients


def _finish(services, hosts, quota) -> PlacementPlan:
    return PlacementPlan(
        hosts={s.name: tuple(sorted(hosts[s.name])) for s in services},
        services={s.name: s for s in services},
        quota={s.name: dict(sorted(quota[s.name].items())) for s in services},
    )


def _quota(clients: int, k: int) -> int:
    return max(1, math.ceil(clients / k))


def _no_host(group: _Group) -> PlacementError:
    if group.trusted_only:
        return PlacementError(f"no trusted node can host {group.name}")
    return PlacementError(f"no eligible host for {group.name}")


# -- greedy spread heuristic -----------------------------------------------------


def _spread(eligible: list[str], k: int, g: OverlayGraph) -> list[str]:
    """Greedy farthest-point pick; ``eligible`` is in rank order."""
    chosen = [eligible[0]]
    while len(chosen) < k:
        best, best_gap = None, -1.0
        for c in eligible:
            if c in chosen:
                continue
            gaps = [g.hop_distance(c, h) for h in chosen]
            gap = min(math.inf if d is None else d for d in gaps)
            if gap > best_gap:
                best, best_gap = c, gap
        chosen.append(best)
    return chosen


def allocate_heuristic(
    services: Sequence[ServiceSpec],
    g: OverlayGraph,
    clients: Mapping[str, int] | None = None,
    *,
    core_affinity: bool = True,
    weights=DEFAULT_WEIGHTS,
    reserved: Mapping[str, float] | None = None,
) -> PlacementPlan:
    """Rank-then-spread placement, one pass per connected component.

    ``clients`` defaults to every non-external node of the component.
    ``reserved`` is compute already committed on a node (re-placement).
    """
    services, comps, residual = _prepare(services, g, clients, core_affinity, reserved)
    hosts: dict[str, list[str]] = {}
    quota: dict[str, dict[str, int]] = {}
    for comp in comps:
        profiles = [g.profiles[n] for n in comp.candidates]
        order = rank_nodes(profiles, weights)
        mean_compute = sum(p.compute for p in profiles) / len(profiles)
        groups = _groups(services, core_affinity)
        for grp in groups:
            grp.clients = max(comp.clients[m.name] for m in grp.members)
        groups.sort(key=lambda gr: (-gr.clients * gr.workload, gr.name))
        for grp in groups:
            allowed = [n for n in order if not grp.trusted_only or g.profiles[n].trusted]
            if not allowed:
                raise _no_host(grp)
            k0 = estimate_replicas(grp.as_spec(), grp.clients, mean_compute) if mean_compute > 0 else 1
            ks = range(min(k0, len(allowed)), len(allowed) + 1) if grp.replicable else [1]
            for k in ks:
                per = _quota(grp.clients, k)
                load = per * grp.workload
                eligible = [n for n in allowed if residual[n] + _EPS >= load]
                if len(eligible) >= k:
                    break
            else:
                raise _no_host(grp)
            chosen = _spread(eligible, k, g)
            for n in chosen:
                residual[n] -= load
            _record(hosts, quota, grp, chosen, per)
    return _finish(services, hosts, quota)


# -- ascending clock auction -----------------------------------------------------


@dataclass
class ClockResult:
    """Outcome of the clock phase, exposed for inspection and tests."""

    demand: list[int]
    price: float
    rounds: int


def clock_phase(
    benefits: Sequence[Sequence[float]], supply: int, price_increment: float = 1.0
) -> ClockResult:
    """Uniform-price ascending clock over hosting slots.

    ``benefits[s][j]`` is the value service ``s`` gets from its ``j``-th
    demanded slot (non-increasing in ``j``; ``-inf`` when no host is left).
    Each service starts demanding ``len(benefits[s])`` slots.  While total
    demand exceeds ``supply`` the price rises; at each price, slots whose
    benefit minus price is negative are dropped lowest-benefit first, one at a
    time, until demand fits.  A service's first slot is never dropped.
    """
    if not price_increment > 0:
        raise ValueError("price_increment must be > 0")
    demand = [len(b) for b in benefits]
    finite = [v for b in benefits for v in b if v != -math.inf]
    ceiling = max(finite, default=0.0)
    price = 0.0
    rounds = 0
    while sum(demand) > supply:
        while sum(demand) > supply:
            marginal = [
                (benefits[s][demand[s] - 1], s)
                for s in range(len(demand))
                if demand[s] > 1 and benefits[s][demand[s] - 1] - price < 0
            ]
            if not marginal:
                break
            _, s = min(marginal)
            demand[s] -= 1
        if sum(demand) <= supply:
            break
        if price > ceiling:
            raise PlacementError(f"demand {sum(demand)} exceeds supply {supply} at any price")
        price += price_increment
        rounds += 1
    return ClockResult(demand=demand, price=price, rounds=rounds)


def max_score_assignment(
    demand: Sequence[int],
    candidates: Sequence[Sequence[tuple[str, float]]],
    slots: Mapping[str, int],
) -> list[list[str]]:
    """Maximum-cardinality assignment of service slots to distinct host nodes.

    Service ``s`` takes at most ``demand[s]`` distinct nodes from
    ``candidates[s]`` (``(node, score)`` pairs); node ``n`` hosts at most
    ``slots[n]`` services.  Among maximum-cardinality assignments the total
    score is maximised (successive shortest paths on the residual network).
    """
    nodes = sorted({n for cs in candidates for n, _ in cs})
    ns = len(demand)
    src, sink = 0, ns + len(nodes) + 1
    node_idx = {n: ns + 1 + k for k, n in enumerate(nodes)}
    size = sink + 1
    # adjacency lists of edge ids; edges stored as parallel arrays
    to, cap, cost, graph = [], [], [], [[] for _ in range(size)]

    def add(u, v, c, w):
        graph[u].append(len(to))
        to.append(v), cap.append(c), cost.append(w)
        graph[v].append(len(to))
        to.append(u), cap.append(0), cost.append(-w)

    for s in range(ns):
        add(src, 1 + s, demand[s], 0.0)
        for n, score in candidates[s]:
            add(1 + s, node_idx[n], 1, -float(score))
    for n in nodes:
        add(node_idx[n], sink, slots.get(n, 0), 0.0)

    while True:
        dist = [math.inf] * size
        via = [-1] * size
        dist[src] = 0.0
        for _ in range(size - 1):
            changed = False
            for u in range(size):
                if dist[u] == math.inf:
                    continue
                for e in graph[u]:
                    if cap[e] > 0 and dist[u] + cost[e] < dist[to[e]] - _EPS:
                        dist[to[e]] = dist[u] + cost[e]
                        via[to[e]] = e
                        changed = True
            if not changed:
                break
        if dist[sink] == math.inf:
            break
        v = sink
        while v != src:
            e = via[v]
            cap[e] -= 1
            cap[e ^ 1] += 1
            v = to[e ^ 1]

    out: list[list[str]] = []
    for s in range(ns):
        chosen = []
        for e in graph[1 + s]:
            if e % 2 == 0 and to[e] != src and cap[e] == 0:
                chosen.append(nodes[to[e] - ns - 1])
        out.append(sorted(chosen))
    return out


def allocate_auction(
    services: Sequence[ServiceSpec],
    g: OverlayGraph,
    clients: Mapping[str, int] | None = None,
    *,
    core_affinity: bool = True,
    weights=DEFAULT_WEIGHTS,
    price_increment: float = 1.0,
    reserved: Mapping[str, float] | None = None,
) -> PlacementPlan:
    """Market-based placement: ascending clock, then exact slot matching.

    Nodes offer ``floor(residual compute / largest per-replica load)`` slots
    and value them at their rank score.  A service's ``j``-th slot is worth
    the score of its ``j``-th best candidate host.
    """
    services, comps, residual = _prepare(services, g, clients, core_affinity, reserved)
    hosts: dict[str, list[str]] = {}
    quota: dict[str, dict[str, int]] = {}
    for comp in comps:
        profiles = [g.profiles[n] for n in comp.candidates]
        scores = rank_scores(profiles, weights)
        order = rank_nodes(profiles, weights)
        mean_compute = sum(p.compute for p in profiles) / len(profiles)
        groups = _groups(services, core_affinity)
        for grp in groups:
            grp.clients = max(comp.clients[m.name] for m in grp.members)
        groups.sort(key=lambda gr: gr.name)
        ks, pers, loads = [], [], []
        for grp in groups:
            k = estimate_replicas(grp.as_spec(), grp.clients, mean_compute) if mean_compute > 0 else 1
            per = _quota(grp.clients, k)
            ks.append(k)
            pers.append(per)
            loads.append(per * grp.workload)
        unit = max(loads)
        slots = {n: max(0, math.floor((residual[n] + _EPS) / unit)) for n in order}
        cands = []
        for grp in groups:
            allowed = [n for n in order if slots[n] > 0 and (not grp.trusted_only or g.profiles[n].trusted)]
            if not allowed:
                raise _no_host(grp)
            cands.append(allowed)
        benefits = [
            [scores[c[j]] if j < len(c) else -math.inf for j in range(k)] for c, k in zip(cands, ks)
        ]
        clock = clock_phase(benefits, sum(slots.values()), price_increment)
        matched = max_score_assignment(
            clock.demand, [[(n, scores[n]) for n in c] for c in cands], slots
        )
        for grp, chosen, per, load in zip(groups, matched, pers, loads):
            if not chosen:
                raise _no_host(grp)
            for n in chosen:
                residual[n] -= load
            _record(hosts, quota, grp, chosen, per)
    return _finish(services, hosts, quota)


def single_host_plan(services: Sequence[ServiceSpec], host: str) -> PlacementPlan:
    """Every service on one designated server (client/server baselines)."""
    services = list(services)
    return PlacementPlan(
        hosts={s.name: (host,) for s in services},
        services={s.name: s for s in services},
        quota=None,
    )


def everywhere_plan(services: Sequence[ServiceSpec], g: OverlayGraph) -> PlacementPlan:
    """Every service on every non-external node (pure peer-to-peer)."""
    services = list(services)
    nodes = tuple(n for n in g.ids if not g.profiles[n].external)
    return PlacementPlan(
        hosts={s.name: nodes for s in services},
        services={s.name: s for s in services},
        quota={s.name: {n: 1 for n in nodes} for s in services},
    )


def plan_cost(plan: PlacementPlan, g: OverlayGraph, assignment) -> tuple[float, float]:
    """``(max node load, mean client hop distance)`` of an associated plan.

    Load counts every client attached to a replica, the host included; hop
    distance averages over clients served by another node (0 if none).
    """
    load: dict[str, float] = {}
    hops = []
    for name, mapping in assignment.by_service.items():
        if name not in plan.services:
            raise ValueError(f"assignment names unknown service {name!r}")
        w = plan.services[name].workload_per_client
        for client, replica in mapping.items():
            if replica not in plan.hosts[name]:
                raise ValueError(f"{client!r} assigned to non-host {replica!r} for {name}")
            d = g.hop_distance(client, replica)
            if d is None:
                raise ValueError(f"{client!r} cannot reach replica {replica!r}")
            load[replica] = load.get(replica, 0.0) + w
            if client != replica:
                hops.append(d)
    max_load = max(load.values(), default=0.0)
    mean_hops = sum(hops) / len(hops) if hops else 0.0
    return max_load, mean_hops
