"""Personal-area-network configuration: one logical node per player."""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

from .model import DeviceProfile, LinkClass, LinkKind, NodeProfile, Position

LOW_BATTERY_THRESHOLD = 20


@dataclass(frozen=True)
class PanConfig:
    coordinator: str
    gateway: str
    aggregated: NodeProfile
    local_only: bool = False


def _checked(devices: Iterable[DeviceProfile]) -> list[DeviceProfile]:
    devices = list(devices)
    if not devices:
        raise ValueError("no devices")
    return devices


def elect_coordinator(devices: Iterable[DeviceProfile]) -> str:
    """Pick the primary computation device.

    Highest compute wins, then highest battery, then the smallest device id.
    """
    devices = _checked(devices)
    owners = {d.owner for d in devices}
    if len(owners) > 1:
        raise ValueError(f"devices belong to several owners: {sorted(owners)}")
    best = min(devices, key=lambda d: (-d.compute, -d.battery, d.device_id))
    return best.device_id


def score_link(link: LinkClass, battery: float, low_battery_threshold: float = LOW_BATTERY_THRESHOLD) -> float:
    """Always-best-connected score of one interface; higher is better."""
    if battery < 0:
        raise ValueError("battery must be >= 0")
    penalty = link.energy_per_message if battery < low_battery_threshold else 0.0
    return link.bandwidth - link.cost_per_message - penalty


def _best_long_range_score(device: DeviceProfile, low_battery_threshold: float) -> float | None:
    scores = [
        score_link(link, device.battery, low_battery_threshold)
        for link in device.interfaces
        if link.kind is LinkKind.LongRange
    ]
    return max(scores) if scores else None


def select_gateway(
    devices: Iterable[DeviceProfile], low_battery_threshold: float = LOW_BATTERY_THRESHOLD
) -> tuple[str, bool]:
    """Return ``(gateway_id, local_only)``.

    Without any long-range interface the coordinator doubles as gateway and
    the PAN is flagged local-only.
    """
    devices = _checked(devices)
    candidates = []
    for d in devices:
        score = _best_long_range_score(d, low_battery_threshold)
        if score is not None:
            candidates.append((-score, d.device_id))
    if not candidates:
        return elect_coordinator(devices), True
    return min(candidates)[1], False


def aggregate_pan(
    devices: Iterable[DeviceProfile],
    position: Position,
    radio_range: float,
    *,
    trusted: bool = False,
    capacity_cap: int | None = None,
    low_battery_threshold: float = LOW_BATTERY_THRESHOLD,
) -> PanConfig:
    devices = _checked(devices)
    if not radio_range > 0:
        raise ValueError("radio_range must be > 0")
    coordinator = elect_coordinator(devices)
    gateway, local_only = select_gateway(devices, low_battery_threshold)
    interfaces: frozenset[LinkClass] = frozenset().union(*(d.interfaces for d in devices))
    node = NodeProfile(
        node_id=devices[0].owner,
        compute=sum(d.compute for d in devices),
        battery=min(d.battery for d in devices),
        position=position,
        radio_range=radio_range,
        interfaces=interfaces,
        capacity_cap=capacity_cap,
        trusted=trusted,
    )
    return PanConfig(coordinator=coordinator, gateway=gateway, aggregated=node, local_only=local_only)
