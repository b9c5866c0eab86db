"""Deterministic tick-driven simulation of a mobile game deployment.

One call to :func:`step` advances one tick through these phases:

1. random-waypoint mobility;
2. overlay rebuild if the edge set changed (clients re-associated);
3. players and bot hosts emit events, filtered by dead reckoning;
4. queued transmissions are delivered and forwarded hop by hop, one tick
   per hop;
5. state-bearing replicas apply the events that are at least ``sync_lag``
   ticks old, in canonical order; every hosted service burns compute;
6. replicas that applied events multicast an update down their
   dissemination trees;
7. nodes whose battery hit zero leave the overlay; orphaned services are
   re-placed and clients re-associated.

Energy is debited when an action happens.  A node whose battery reaches
zero stops acting immediately; it is removed from the overlay in phase 7.
"""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass, field, replace

from .association import AssignmentMap, assign_clients, build_dissemination_tree
from .model import DeviceProfile, LinkClass, LinkKind, ModuleKind, NodeProfile, Position, external_server
from .overlay import BroadcastTree, OverlayGraph, mesh_edges
from .pan import aggregate_pan
from .placement import (
    PlacementError,
    PlacementPlan,
    ServiceSpec,
    allocate_auction,
    allocate_heuristic,
    everywhere_plan,
    plan_cost,
    rank_nodes,
    single_host_plan,
)
from .rng import SplitMix64
from .scenario import Scenario
from .sync import (
    N_ACTIONS,
    ActorState,
    DeadReckoningFilter,
    GameEvent,
    GameState,
    apply_events,
    check_consistency,
    order_events,
    state_digest,
    step_actor,
)


class Architecture(str, enum.Enum):
    ClientServerDirect = "cs"
    ClientServerOverlay = "cs-overlay"
    PureP2P = "p2p"
    HybridDistributed = "hybrid"


class ConfigurationError(ValueError):
    """The scenario cannot be deployed under the requested architecture."""


class SimulationInvariantError(RuntimeError):
    pass


@dataclass(frozen=True)
class EnergyModel:
    e_send: int = 1
    e_receive: int = 1
    e_relay: int = 1
    e_compute: int = 0
    wireless_multicast: bool = False

    def __post_init__(self):
        for name in ("e_send", "e_receive", "e_relay", "e_compute"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass
class Message:
    kind: str  # "event" or "update"
    service: str
    origin: str
    at: str
    dest: str | None = None
    event: GameEvent | None = None
    tree: BroadcastTree | None = None
    clients: tuple[str, ...] = ()
    hops: int = 0


@dataclass
class Replica:
    state: GameState
    buffer: list[GameEvent] = field(default_factory=list)


@dataclass
class Emitter:
    actor: int
    rate: float
    avatar: ActorState
    dr: DeadReckoningFilter
    bot_service: str | None = None


@dataclass
class NodeCounters:
    sent: int = 0
    received: int = 0
    relayed: int = 0
    work_units: float = 0


@dataclass
class SimState:
    scenario: Scenario
    arch: Architecture
    seed: int
    energy: EnergyModel
    services: list[ServiceSpec]
    rng: SplitMix64
    profiles: dict[str, NodeProfile]
    overlay: OverlayGraph
    plan: PlacementPlan
    assignment: AssignmentMap
    battery: dict[str, int | None]
    initial_battery: dict[str, int | None]
    debits: dict[str, int]
    failure_tick: dict[str, int]
    waypoints: dict[str, Position]
    speeds: dict[str, float]
    replicas: dict[str, dict[str, Replica]]
    emitters: dict[str, Emitter]
    seq: dict[str, int]
    counters: dict[str, NodeCounters]
    sync_lag: int
    ttl: int
    server: str | None = None
    tick: int = 0
    queue: list = field(default_factory=list)
    enqueued: int = 0
    # message ledger: every link delivery created is arrived, dropped or queued
    created: int = 0
    arrived: int = 0
    dropped: int = 0
    undeliverable: int = 0
    hop_sum: int = 0
    hop_count: int = 0
    hop_max: int = 0
    max_load: float = 0
    checks: int = 0
    passes: int = 0
    candidates: int = 0
    suppressed: int = 0
    reconfigurations: int = 0
    replacements: int = 0
    dying: list[str] = field(default_factory=list)
    _trees: dict = field(default_factory=dict, compare=False, repr=False)

    def alive(self, node: str) -> bool:
        return node not in self.failure_tick

    def clients(self) -> list[str]:
        return [n for n in self.overlay.ids if not self.overlay.profiles[n].external]


@dataclass
class NodeMetrics:
    node_id: str
    sent: int
    received: int
    relayed: int
    work_units: float
    final_battery: int | None
    failure_tick: int | None


@dataclass
class MetricsReport:
    nodes: list[NodeMetrics]
    mean_hops: float
    max_hops: int
    max_load: float
    total_messages: int
    consistency_rate: float
    dr_suppression: float
    in_flight: int = 0
    dropped: int = 0
    undeliverable: int = 0
    reconfigurations: int = 0
    replacements: int = 0


# -- construction ----------------------------------------------------------------


def _links(scenario: Scenario) -> dict[str, LinkClass]:
    return {
        kind: LinkClass(LinkKind(kind), spec.bandwidth, spec.cost_per_message, spec.energy_per_message)
        for kind, spec in (("ShortRange", scenario.links.ShortRange), ("LongRange", scenario.links.LongRange))
    }


def node_profiles(scenario: Scenario) -> dict[str, NodeProfile]:
    """Aggregate every player's PAN into one node; add the external server."""
    links = _links(scenario)
    out: dict[str, NodeProfile] = {}
    for n in sorted(scenario.nodes, key=lambda n: n.id):
        devices = [
            DeviceProfile(
                device_id=d.id,
                compute=d.compute,
                battery=d.battery,
                interfaces=frozenset(links[i] for i in d.interfaces),
                owner=n.id,
            )
            for d in n.devices
        ]
        pan = aggregate_pan(
            devices,
            Position(*n.position),
            n.radio_range,
            trusted=n.trusted,
            capacity_cap=n.capacity_cap,
            low_battery_threshold=scenario.low_battery_threshold,
        )
        out[n.id] = pan.aggregated
    if scenario.external_server is not None:
        srv = external_server(scenario.external_server.id)
        out[srv.node_id] = srv
    return dict(sorted(out.items()))


def service_specs(scenario: Scenario) -> list[ServiceSpec]:
    specs = [
        ServiceSpec(
            kind=s.kind,
            workload_per_client=s.workload_per_client,
            state_bearing=s.state_bearing,
            name=s.name or s.kind.value,
        )
        for s in scenario.services
    ]
    for b in sorted(scenario.bots, key=lambda b: b.id):
        specs.append(
            ServiceSpec(
                kind=ModuleKind.ArtificialIntelligence,
                workload_per_client=b.workload_per_client,
                name=f"{ModuleKind.ArtificialIntelligence.value}/{b.id}",
            )
        )
    return specs


def _live_profiles(s: SimState) -> list[NodeProfile]:
    return [p for n, p in s.profiles.items() if s.alive(n)]


def _caps(s: SimState) -> dict[str, int | None]:
    return {n: p.capacity_cap for n, p in s.profiles.items()}


def _pick_server(s: SimState) -> str:
    sc = s.scenario
    if sc.cs_server is not None and s.alive(sc.cs_server):
        return sc.cs_server
    if sc.external_server is not None and s.alive(sc.external_server.id):
        return sc.external_server.id
    players = [p for p in _live_profiles(s) if not p.external]
    if not players:
        raise PlacementError("no live node can act as server")
    return rank_nodes(players)[0]


def _allocate(s: SimState, services: list[ServiceSpec], reserved=None) -> PlacementPlan:
    sc = s.scenario
    if sc.allocator == "auction":
        return allocate_auction(
            services,
            s.overlay,
            core_affinity=sc.core_affinity,
            price_increment=sc.price_increment,
            reserved=reserved,
        )
    return allocate_heuristic(services, s.overlay, core_affinity=sc.core_affinity, reserved=reserved)


def _initial_plan(s: SimState) -> PlacementPlan:
    if s.arch in (Architecture.ClientServerDirect, Architecture.ClientServerOverlay):
        s.server = _pick_server(s)
        return single_host_plan(s.services, s.server)
    if s.arch is Architecture.PureP2P:
        return everywhere_plan(s.services, s.overlay)
    return _allocate(s, s.services)


def init(scenario: Scenario, arch: Architecture | str, seed: int) -> SimState:
    arch = Architecture(arch)
    profiles = node_profiles(scenario)
    battery = {n: p.battery for n, p in profiles.items()}
    failure = {n: 0 for n, b in battery.items() if b == 0}
    live = [p for n, p in profiles.items() if n not in failure]
    overlay = OverlayGraph(live, scenario.long_range_hop_cost)
    services = service_specs(scenario)
    n_nodes = len(profiles)
    s = SimState(
        scenario=scenario,
        arch=arch,
        seed=seed,
        energy=EnergyModel(**scenario.energy.model_dump()),
        services=services,
        rng=SplitMix64(seed),
        profiles=profiles,
        overlay=overlay,
        plan=PlacementPlan({}, {}),
        assignment=AssignmentMap(),
        battery=dict(battery),
        initial_battery=dict(battery),
        debits={n: 0 for n in profiles},
        failure_tick=failure,
        waypoints={},
        speeds={n.id: n.speed for n in sorted(scenario.nodes, key=lambda n: n.id)},
        replicas={},
        emitters={},
        seq={n: 0 for n in profiles},
        counters={n: NodeCounters() for n in profiles},
        sync_lag=scenario.sync_lag if scenario.sync_lag is not None else n_nodes,
        ttl=2 * n_nodes,
    )
    try:
        s.plan = _initial_plan(s)
    except PlacementError as exc:
        raise ConfigurationError(str(exc)) from exc
    if arch is Architecture.ClientServerDirect:
        far = [c for c in s.clients() if c != s.server and not s.overlay.has_edge(c, s.server)]
        if far:
            raise ConfigurationError(f"client/server direct: {far[0]!r} has no link to server {s.server!r}")
    s.assignment = assign_clients(s.plan, overlay, _caps(s), strict=False)

    players = sorted(n.id for n in scenario.nodes)
    bots = sorted(b.id for b in scenario.bots)
    actors = list(range(len(players) + len(bots)))
    for svc in services:
        if svc.state_bearing:
            s.replicas[svc.name] = {h: Replica(GameState.initial(actors)) for h in s.plan.hosts[svc.name]}
    threshold = math.inf if scenario.dr_threshold is None else scenario.dr_threshold
    rates = {n.id: n.event_rate for n in scenario.nodes}
    for k, pid in enumerate(players):
        s.emitters[pid] = Emitter(k, rates[pid], ActorState(), DeadReckoningFilter(threshold))
    bot_rates = {b.id: b.event_rate for b in scenario.bots}
    for k, bid in enumerate(bots):
        s.emitters[bid] = Emitter(
            len(players) + k,
            bot_rates[bid],
            ActorState(),
            DeadReckoningFilter(threshold),
            bot_service=f"{ModuleKind.ArtificialIntelligence.value}/{bid}",
        )
    w, h = scenario.arena.width, scenario.arena.height
    for n in players:
        if s.speeds[n] > 0 and s.alive(n):
            s.waypoints[n] = Position(s.rng.uniform(0.0, w), s.rng.uniform(0.0, h))
    return s


# -- energy and transmissions ----------------------------------------------------


def _debit(s: SimState, node: str, amount) -> None:
    if amount <= 0 or s.battery[node] is None or not s.alive(node):
        return
    take = min(int(amount), s.battery[node])
    s.battery[node] -= take
    s.debits[node] += take
    if s.battery[node] == 0:
        s.failure_tick[node] = s.tick
        s.dying.append(node)


def _transmit(s: SimState, u: str, receivers: list[str], msg: Message, relay: bool) -> None:
    """Send ``msg`` from ``u`` to each receiver, arriving next tick."""
    cost = s.energy.e_relay if relay else s.energy.e_send
    counters = s.counters[u]
    if s.energy.wireless_multicast:
        batches = [receivers]
    else:
        batches = [[r] for r in receivers]
    for batch in batches:
        if not s.alive(u):
            s.undeliverable += len(batch)
            continue
        if relay:
            counters.relayed += 1
        else:
            counters.sent += 1
        _debit(s, u, cost)
        for r in batch:
            heapq.heappush(s.queue, (s.tick + 1, s.enqueued, replace(msg, at=r)))
            s.enqueued += 1
            s.created += 1


def _unicast(s: SimState, src: str, msg: Message, relay: bool) -> None:
    nxt = s.overlay.next_hop(src, msg.dest) if msg.dest in s.overlay and src in s.overlay else None
    if nxt is None or msg.hops >= s.ttl:
        s.undeliverable += 1
        return
    _transmit(s, src, [nxt], replace(msg, hops=msg.hops + 1), relay)


# -- phases ----------------------------------------------------------------------


def _mobility(s: SimState) -> bool:
    moved = False
    w, h = s.scenario.arena.width, s.scenario.arena.height
    for n, target in list(s.waypoints.items()):
        if not s.alive(n):
            continue
        speed = s.speeds[n]
        pos = s.profiles[n].position
        dx, dy = target.x - pos.x, target.y - pos.y
        d = math.sqrt(dx * dx + dy * dy)
        if d <= speed:
            new = target
            s.waypoints[n] = Position(s.rng.uniform(0.0, w), s.rng.uniform(0.0, h))
        else:
            new = Position(pos.x + dx / d * speed, pos.y + dy / d * speed)
        if new != pos:
            s.profiles[n] = replace(s.profiles[n], position=new)
            moved = True
    return moved


def _rebuild_overlay(s: SimState) -> None:
    s.overlay = OverlayGraph(_live_profiles(s), s.scenario.long_range_hop_cost)
    s._trees.clear()
    s.reconfigurations += 1


def _reassociate(s: SimState) -> None:
    s.assignment = assign_clients(s.plan, s.overlay, _caps(s), strict=False)


def _emit(s: SimState) -> None:
    t = s.tick
    targets = [
        (name, sorted(h for h in s.plan.hosts.get(name, ()) if s.alive(h)))
        for name in sorted(s.replicas)
    ]
    for key in sorted(s.emitters, key=lambda k: (s.emitters[k].bot_service is not None, k)):
        em = s.emitters[key]
        if em.bot_service is None:
            node = key
        else:
            hosts = [h for h in s.plan.hosts.get(em.bot_service, ()) if s.alive(h)]
            node = min(hosts) if hosts else None
        if node is None or not s.alive(node):
            continue
        count = int(em.rate)
        frac = em.rate - count
        if frac > 0 and s.rng.random() < frac:
            count += 1
        for _ in range(count):
            payload = s.rng.below(N_ACTIONS)
            em.avatar = step_actor(em.avatar, payload)
            s.candidates += 1
            if not em.dr.offer(em.avatar.position, em.avatar.velocity, t):
                s.suppressed += 1
                continue
            s.seq[node] += 1
            ev = GameEvent(seq=s.seq[node], source=node, tick=t, payload=payload, actor=em.actor)
            for name, hosts in targets:
                for h in hosts:
                    if h == node:
                        s.replicas[name][h].buffer.append(ev)
                    elif s.alive(node):
                        _unicast(s, node, Message("event", name, node, node, dest=h, event=ev), relay=False)


def _deliver(s: SimState) -> None:
    e = s.energy
    while s.queue and s.queue[0][0] <= s.tick:
        _, _, msg = heapq.heappop(s.queue)
        at = msg.at
        if not s.alive(at):
            s.dropped += 1
            continue
        s.arrived += 1
        if msg.kind == "event":
            if at == msg.dest:
                s.counters[at].received += 1
                _debit(s, at, e.e_receive)
                replica = s.replicas.get(msg.service, {}).get(at)
                if replica is not None:
                    replica.buffer.append(msg.event)
            elif s.alive(at):
                _unicast(s, at, msg, relay=True)
            continue
        if at in msg.clients:
            s.counters[at].received += 1
            _debit(s, at, e.e_receive)
        children = [c for c in msg.tree.children(at) if at in s.overlay and c in s.overlay and s.overlay.has_edge(at, c)]
        s.undeliverable += len(msg.tree.children(at)) - len(children)
        if children and s.alive(at):
            _transmit(s, at, children, msg, relay=True)


def _apply_and_compute(s: SimState) -> list[tuple[str, str]]:
    horizon = s.tick - s.sync_lag
    updated = []
    for name in sorted(s.replicas):
        for host in sorted(s.replicas[name]):
            if not s.alive(host):
                continue
            rep = s.replicas[name][host]
            ready = [ev for ev in rep.buffer if ev.tick <= horizon]
            if not ready:
                continue
            rep.buffer = [ev for ev in rep.buffer if ev.tick > horizon]
            rep.state = apply_events(rep.state, order_events(ready))
            updated.append((name, host))
    work: dict[str, float] = {}
    for name, mapping in s.assignment.by_service.items():
        wpc = s.plan.services[name].workload_per_client
        for replica in mapping.values():
            work[replica] = work.get(replica, 0) + wpc
    for node in sorted(work):
        if not s.alive(node):
            continue
        s.counters[node].work_units += work[node]
        s.max_load = max(s.max_load, work[node])
        _debit(s, node, work[node] * s.energy.e_compute)
    for name in sorted(s.replicas):
        live = [h for h in sorted(s.replicas[name]) if s.alive(h)]
        if len(live) >= 2:
            s.checks += 1
            s.passes += check_consistency([state_digest(s.replicas[name][h].state) for h in live])
    for name, mapping in s.assignment.by_service.items():
        for client, replica in mapping.items():
            if client == replica:
                continue
            d = s.overlay.hop_distance(client, replica)
            if d is None:
                continue
            s.hop_sum += d
            s.hop_count += 1
            s.hop_max = max(s.hop_max, d)
    return updated


def _disseminate(s: SimState, updated: list[tuple[str, str]]) -> None:
    for name, host in updated:
        if not s.alive(host):
            continue
        clients = tuple(c for c in s.assignment.clients_of(name, host) if c != host and s.alive(c))
        if not clients:
            continue
        key = (host, clients)
        tree = s._trees.get(key)
        if tree is None:
            tree = build_dissemination_tree(s.overlay, host, clients)
            s._trees[key] = tree
        children = list(tree.children(host))
        msg = Message("update", name, host, host, tree=tree, clients=clients)
        _transmit(s, host, children, msg, relay=False)


def _replace_orphans(s: SimState, dead: list[str]) -> None:
    old_hosts = {name: tuple(hs) for name, hs in s.plan.hosts.items()}
    if s.arch in (Architecture.ClientServerDirect, Architecture.ClientServerOverlay):
        if s.server not in dead:
            return
        try:
            s.server = _pick_server(s)
        except PlacementError:
            s.plan = PlacementPlan({}, {})
        else:
            s.plan = single_host_plan(s.services, s.server)
    elif s.arch is Architecture.PureP2P:
        s.plan = everywhere_plan(s.services, s.overlay)
    else:
        orphaned = [svc for svc in s.services if svc.name in s.plan.hosts and set(s.plan.hosts[svc.name]) & set(dead)]
        if not orphaned:
            return
        kept = {n: hs for n, hs in s.plan.hosts.items() if n not in {o.name for o in orphaned}}
        reserved: dict[str, float] = {}
        for name in kept:
            w = s.plan.services[name].workload_per_client
            for h in kept[name]:
                q = s.plan.replica_quota(name, h) or 1
                reserved[h] = reserved.get(h, 0.0) + q * w
        hosts = dict(kept)
        quota = {n: dict((s.plan.quota or {}).get(n, {})) for n in kept}
        try:
            fresh = _allocate(s, orphaned, reserved=reserved)
        except PlacementError:
            fresh = None
        for svc in orphaned:
            if fresh is not None:
                hosts[svc.name] = fresh.hosts[svc.name]
                quota[svc.name] = fresh.quota[svc.name]
            else:
                survivors = tuple(h for h in s.plan.hosts[svc.name] if h not in dead)
                if survivors:
                    hosts[svc.name] = survivors
                    quota[svc.name] = {h: q for h, q in s.plan.quota[svc.name].items() if h in survivors}
        s.plan = PlacementPlan(
            hosts={svc.name: hosts[svc.name] for svc in s.services if svc.name in hosts},
            services={svc.name: svc for svc in s.services if svc.name in hosts},
            quota={svc.name: quota[svc.name] for svc in s.services if svc.name in hosts},
        )
    s.replacements += 1
    # state transfer: new replicas copy the lowest-id surviving replica
    actors = list(range(len(s.emitters)))
    for name in list(s.replicas):
        current = s.replicas[name]
        survivors = [h for h in sorted(old_hosts.get(name, ())) if h in current and s.alive(h)]
        new_hosts = s.plan.hosts.get(name, ())
        fresh_reps = {}
        for h in new_hosts:
            if h in current and s.alive(h):
                fresh_reps[h] = current[h]
            elif survivors:
                donor = current[survivors[0]]
                fresh_reps[h] = Replica(donor.state, list(donor.buffer))
            else:
                fresh_reps[h] = Replica(GameState.initial(actors))
        s.replicas[name] = fresh_reps


def _handle_failures(s: SimState) -> None:
    if not s.dying:
        return
    dead = sorted(s.dying)
    s.dying = []
    _rebuild_overlay(s)
    _replace_orphans(s, dead)
    _reassociate(s)


def _check_invariants(s: SimState) -> None:
    for n, b in s.battery.items():
        if b is None:
            continue
        if b < 0:
            raise SimulationInvariantError(f"node {n}: negative battery {b}")
        if s.initial_battery[n] - s.debits[n] != b:
            raise SimulationInvariantError(f"node {n}: energy ledger mismatch")
        if (b == 0) != (n in s.failure_tick):
            raise SimulationInvariantError(f"node {n}: failure flag disagrees with battery")
    if s.created != s.arrived + s.dropped + len(s.queue):
        raise SimulationInvariantError(
            f"message ledger: created {s.created} != arrived {s.arrived} + dropped {s.dropped} + queued {len(s.queue)}"
        )
    for n in s.overlay.ids:
        if not s.alive(n):
            raise SimulationInvariantError(f"failed node {n} still in overlay")


def step(s: SimState) -> SimState:
    """Advance ``s`` by one tick in place and return it."""
    if s.speeds and s.waypoints and _mobility(s):
        edges = mesh_edges(_live_profiles(s), s.scenario.long_range_hop_cost)
        if edges != s.overlay.edges:
            _rebuild_overlay(s)
            _reassociate(s)
        else:
            s.overlay = OverlayGraph(_live_profiles(s), s.scenario.long_range_hop_cost)
    _emit(s)
    _deliver(s)
    updated = _apply_and_compute(s)
    _disseminate(s, updated)
    _handle_failures(s)
    _check_invariants(s)
    s.tick += 1
    return s


def report(s: SimState) -> MetricsReport:
    nodes = [
        NodeMetrics(
            node_id=n,
            sent=c.sent,
            received=c.received,
            relayed=c.relayed,
            work_units=c.work_units,
            final_battery=s.battery[n],
            failure_tick=s.failure_tick.get(n),
        )
        for n, c in sorted(s.counters.items())
    ]
    return MetricsReport(
        nodes=nodes,
        mean_hops=s.hop_sum / s.hop_count if s.hop_count else 0.0,
        max_hops=s.hop_max,
        max_load=s.max_load,
        total_messages=sum(c.sent + c.relayed for c in s.counters.values()),
        consistency_rate=s.passes / s.checks if s.checks else 1.0,
        dr_suppression=s.suppressed / s.candidates if s.candidates else 0.0,
        in_flight=len(s.queue),
        dropped=s.dropped,
        undeliverable=s.undeliverable,
        reconfigurations=s.reconfigurations,
        replacements=s.replacements,
    )


def run(scenario: Scenario, arch: Architecture | str, seed: int, ticks: int) -> MetricsReport:
    if ticks < 0:
        raise ValueError("ticks must be >= 0")
    s = init(scenario, arch, seed)
    for _ in range(ticks):
        step(s)
    return report(s)


def static_cost(s: SimState) -> tuple[float, float]:
    """Plan-level ``(max node load, mean client hops)`` of the current state."""
    return plan_cost(s.plan, s.overlay, s.assignment)
