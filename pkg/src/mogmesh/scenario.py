"""Scenario files: a strict, versioned JSON schema.

Top-level fields (defaults in parentheses)::

    version              1 (1)
    arena                {"width": >0, "height": >0}              required
    links                {"ShortRange": Link, "LongRange": Link}  (see DEFAULT_LINKS)
    nodes                [Node, ...]                               required, >= 1
    external_server      {"id": str} | null                        (null)
    bots                 [{"id", "event_rate" (1.0), "workload_per_client" (1)}]  ([])
    services             [{"kind", "workload_per_client", "state_bearing" (auto), "name" (kind)}]
    energy               {"e_send" (1), "e_receive" (1), "e_relay" (1),
                          "e_compute" (0), "wireless_multicast" (false)}
    allocator            "heuristic" | "auction"                   ("heuristic")
    core_affinity        bool                                      (true)
    dr_threshold         >= 0 or null for never-resend              (2.0)
    low_battery_threshold >= 0                                     (20)
    long_range_hop_cost  int >= 1                                  (1)
    price_increment      > 0                                       (1.0)
    cs_server            node id for client/server runs            (external server, else top-ranked node)
    sync_lag             ticks a replica waits before applying     (number of nodes)

    Link  = {"bandwidth" > 0, "cost_per_message" (0), "energy_per_message" (0)}
    Node  = {"id", "position": [x, y], "radio_range" > 0, "speed" (0),
             "trusted" (false), "event_rate" (1.0), "capacity_cap" (null),
             "devices": [{"id", "compute" >= 0, "battery" >= 0,
                          "interfaces": ["ShortRange" | "LongRange", ...]}]}

Unknown keys are rejected everywhere.  Compute, battery, workload and
energy values are integers so that the energy ledger stays exact.
"""

from __future__ import annotations

import hashlib
import json
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .model import ModuleKind, PlacementClass, classify_module

SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    """Invalid scenario text; ``line``/``column`` are set for syntax errors."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        super().__init__(message)
        self.line = line
        self.column = column


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Arena(_Strict):
    width: float = Field(gt=0)
    height: float = Field(gt=0)


class LinkSpec(_Strict):
    bandwidth: float = Field(gt=0)
    cost_per_message: float = 0.0
    energy_per_message: float = Field(default=0.0, ge=0)


DEFAULT_LINKS = {
    "ShortRange": LinkSpec(bandwidth=10.0, cost_per_message=0.0, energy_per_message=1.0),
    "LongRange": LinkSpec(bandwidth=5.0, cost_per_message=2.0, energy_per_message=3.0),
}


class Links(_Strict):
    ShortRange: LinkSpec = DEFAULT_LINKS["ShortRange"]
    LongRange: LinkSpec = DEFAULT_LINKS["LongRange"]


class DeviceSpec(_Strict):
    id: str = Field(min_length=1)
    compute: int = Field(ge=0)
    battery: int = Field(ge=0)
    interfaces: list[Literal["ShortRange", "LongRange"]] = Field(min_length=1)


class NodeSpec(_Strict):
    id: str = Field(min_length=1)
    position: tuple[float, float]
    radio_range: float = Field(gt=0)
    speed: float = Field(default=0.0, ge=0)
    trusted: bool = False
    event_rate: float = Field(default=1.0, ge=0)
    capacity_cap: int | None = Field(default=None, ge=1)
    devices: list[DeviceSpec] = Field(min_length=1)


class ServerSpec(_Strict):
    id: str = Field(default="SERVER", min_length=1)


class BotSpec(_Strict):
    id: str = Field(min_length=1)
    event_rate: float = Field(default=1.0, ge=0)
    workload_per_client: int = Field(default=1, gt=0)


class ServiceEntry(_Strict):
    kind: ModuleKind
    workload_per_client: int = Field(gt=0)
    state_bearing: bool | None = None
    name: str | None = None

    @field_validator("kind")
    @classmethod
    def _placeable(cls, kind: ModuleKind) -> ModuleKind:
        pc = classify_module(kind)
        if pc in (PlacementClass.MandatoryEverywhere, PlacementClass.ExternalServer):
            raise ValueError(f"{kind.value} is {pc.value}; it is not a placeable service")
        return kind


class EnergySpec(_Strict):
    e_send: int = Field(default=1, ge=0)
    e_receive: int = Field(default=1, ge=0)
    e_relay: int = Field(default=1, ge=0)
    e_compute: int = Field(default=0, ge=0)
    wireless_multicast: bool = False


class Scenario(_Strict):
    version: Literal[1] = SCHEMA_VERSION
    arena: Arena
    links: Links = Links()
    nodes: list[NodeSpec] = Field(min_length=1)
    external_server: ServerSpec | None = None
    bots: list[BotSpec] = []
    services: list[ServiceEntry] = []
    energy: EnergySpec = EnergySpec()
    allocator: Literal["heuristic", "auction"] = "heuristic"
    core_affinity: bool = True
    dr_threshold: float | None = Field(default=2.0, ge=0)
    low_battery_threshold: float = Field(default=20.0, ge=0)
    long_range_hop_cost: int = Field(default=1, ge=1)
    price_increment: float = Field(default=1.0, gt=0)
    cs_server: str | None = None
    sync_lag: int | None = Field(default=None, ge=0)

    @model_validator(mode="after")
    def _references(self) -> Scenario:
        seen: set[str] = set()

        def claim(ident: str, what: str):
            if ident in seen:
                raise ValueError(f"duplicate id {ident!r} ({what})")
            seen.add(ident)

        for n in self.nodes:
            claim(n.id, "node")
        if self.external_server is not None:
            claim(self.external_server.id, "external_server")
        for b in self.bots:
            claim(b.id, "bot")
        devices: set[str] = set()
        for n in self.nodes:
            for d in n.devices:
                if d.id in devices:
                    raise ValueError(f"duplicate device id {d.id!r}")
                devices.add(d.id)
        names = [s.name or s.kind.value for s in self.services]
        names += [f"{ModuleKind.ArtificialIntelligence.value}/{b.id}" for b in self.bots]
        dup = sorted({x for x in names if names.count(x) > 1})
        if dup:
            raise ValueError(f"duplicate service name {dup[0]!r}")
        if self.cs_server is not None:
            known = {n.id for n in self.nodes}
            if self.external_server is not None:
                known.add(self.external_server.id)
            if self.cs_server not in known:
                raise ValueError(f"cs_server {self.cs_server!r} is not a node")
        return self

    def digest(self) -> str:
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()


def _format_loc(loc) -> str:
    out = ""
    for part in loc:
        if isinstance(part, int):
            out += f"[{part}]"
        else:
            out += ("." if out else "") + str(part)
    return out or "<root>"


def parse_scenario(text: str | bytes) -> Scenario:
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ScenarioError(f"scenario is not UTF-8: {exc}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}", exc.lineno, exc.colno
        ) from None
    return scenario_from_dict(raw)


def scenario_from_dict(raw) -> Scenario:
    try:
        return Scenario.model_validate(raw)
    except ValidationError as exc:
        problems = []
        for err in exc.errors():
            msg = err["msg"].removeprefix("Value error, ")
            problems.append(f"{_format_loc(err['loc'])}: {msg}")
        raise ScenarioError("; ".join(problems)) from None


def load_scenario(path) -> Scenario:
    with open(path, "rb") as fh:
        return parse_scenario(fh.read())
