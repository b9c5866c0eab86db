"""Shared vocabulary: game-engine modules, capability profiles, positions, links."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field


class ModuleKind(str, enum.Enum):
    InputManagement = "InputManagement"
    AudioSound = "AudioSound"
    SceneGraph = "SceneGraph"
    PhysicsSystem = "PhysicsSystem"
    CollisionDetection = "CollisionDetection"
    GameStateManagement = "GameStateManagement"
    VirtualMapStore = "VirtualMapStore"
    ArtificialIntelligence = "ArtificialIntelligence"
    FiniteStateMachine = "FiniteStateMachine"
    DeadReckoning = "DeadReckoning"
    AccountingScore = "AccountingScore"
    Networking = "Networking"
    OverlayManagement = "OverlayManagement"


class PlacementClass(str, enum.Enum):
    MandatoryEverywhere = "MandatoryEverywhere"
    Distributable = "Distributable"
    DistributableReplicable = "DistributableReplicable"
    ExternalServer = "ExternalServer"
    TrustedNode = "TrustedNode"


_CLASSIFICATION = {
    ModuleKind.InputManagement: PlacementClass.MandatoryEverywhere,
    ModuleKind.AudioSound: PlacementClass.MandatoryEverywhere,
    ModuleKind.SceneGraph: PlacementClass.MandatoryEverywhere,
    ModuleKind.DeadReckoning: PlacementClass.MandatoryEverywhere,
    ModuleKind.Networking: PlacementClass.MandatoryEverywhere,
    ModuleKind.PhysicsSystem: PlacementClass.DistributableReplicable,
    ModuleKind.CollisionDetection: PlacementClass.DistributableReplicable,
    ModuleKind.GameStateManagement: PlacementClass.DistributableReplicable,
    ModuleKind.ArtificialIntelligence: PlacementClass.Distributable,
    ModuleKind.FiniteStateMachine: PlacementClass.Distributable,
    ModuleKind.OverlayManagement: PlacementClass.Distributable,
    ModuleKind.VirtualMapStore: PlacementClass.ExternalServer,
    ModuleKind.AccountingScore: PlacementClass.TrustedNode,
}

# Modules that make up the core game engine; co-placed when core affinity is on.
CORE_ENGINE = (
    ModuleKind.PhysicsSystem,
    ModuleKind.CollisionDetection,
    ModuleKind.GameStateManagement,
)


def classify_module(kind: ModuleKind) -> PlacementClass:
    """Return where a game-engine module is allowed to run."""
    return _CLASSIFICATION[ModuleKind(kind)]


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite position ({self.x}, {self.y})")


def euclidean_distance(a: Position, b: Position) -> float:
    # sqrt(dx*dx + dy*dy) rather than hypot: the compiled mesh kernel uses the
    # same expression, and edge decisions must agree bit for bit.
    dx = a.x - b.x
    dy = a.y - b.y
    return math.sqrt(dx * dx + dy * dy)


class LinkKind(str, enum.Enum):
    ShortRange = "ShortRange"
    LongRange = "LongRange"


@dataclass(frozen=True)
class LinkClass:
    """A network interface class and its abstract cost parameters."""

    kind: LinkKind
    bandwidth: float
    cost_per_message: float = 0.0
    energy_per_message: float = 0.0

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError(f"link bandwidth must be > 0, got {self.bandwidth}")
        if self.energy_per_message < 0:
            raise ValueError("energy_per_message must be >= 0")


@dataclass(frozen=True)
class DeviceProfile:
    device_id: str
    compute: float
    battery: int
    interfaces: frozenset[LinkClass]
    owner: str

    def __post_init__(self):
        if self.compute < 0:
            raise ValueError(f"device {self.device_id}: compute must be >= 0")
        if self.battery < 0:
            raise ValueError(f"device {self.device_id}: battery must be >= 0")
        if not self.interfaces:
            raise ValueError(f"device {self.device_id}: needs at least one interface")
        object.__setattr__(self, "interfaces", frozenset(self.interfaces))

    def has_long_range(self) -> bool:
        return any(link.kind is LinkKind.LongRange for link in self.interfaces)


@dataclass(frozen=True)
class NodeProfile:
    """One overlay node: a player's aggregated PAN or the external server.

    ``battery`` is ``None`` for nodes with an unbounded supply (the external
    server), and ``compute`` is ``math.inf`` for them.
    """

    node_id: str
    compute: float
    battery: int | None
    position: Position
    radio_range: float
    interfaces: frozenset[LinkClass] = field(default_factory=frozenset)
    capacity_cap: int | None = None
    trusted: bool = False
    external: bool = False

    def __post_init__(self):
        if not self.radio_range > 0:
            raise ValueError(f"node {self.node_id}: radio_range must be > 0")
        if self.compute < 0:
            raise ValueError(f"node {self.node_id}: compute must be >= 0")
        if self.battery is not None and self.battery < 0:
            raise ValueError(f"node {self.node_id}: battery must be >= 0")
        if self.capacity_cap is not None and self.capacity_cap < 1:
            raise ValueError(f"node {self.node_id}: capacity_cap must be >= 1")
        object.__setattr__(self, "interfaces", frozenset(self.interfaces))

    def has_long_range(self) -> bool:
        return any(link.kind is LinkKind.LongRange for link in self.interfaces)

    def best_bandwidth(self) -> float:
        return max((link.bandwidth for link in self.interfaces), default=0.0)


def external_server(node_id: str = "SERVER") -> NodeProfile:
    """The distinguished off-mesh server reachable only over long-range links."""
    return NodeProfile(
        node_id=node_id,
        compute=math.inf,
        battery=None,
        position=Position(0.0, 0.0),
        radio_range=1.0,
        interfaces=frozenset(),
        external=True,
    )
