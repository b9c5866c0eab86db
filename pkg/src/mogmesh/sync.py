"""Replica consistency for the game-state service, plus dead reckoning.

Replicas order every event batch by ``(tick, source, seq)`` and fold it
through one deterministic transition, so any two replicas that applied the
same events agree bit for bit.  Agreement is checked with a 64-bit FNV-1a
digest of the canonical state encoding:

    for each actor, ascending id:  id, x, y, vx, vy, score
    then:                          event_count

every integer written as signed 64-bit little-endian.
"""

from __future__ import annotations

import enum
import struct
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field, replace
from types import MappingProxyType

from . import kernels
from .model import Position, euclidean_distance


class Action(enum.IntEnum):
    MOVE_EAST = 0
    MOVE_WEST = 1
    MOVE_NORTH = 2
    MOVE_SOUTH = 3
    ACCEL_EAST = 4
    ACCEL_WEST = 5
    ACCEL_NORTH = 6
    ACCEL_SOUTH = 7
    SCORE = 8
    ADVANCE = 9


N_ACTIONS = len(Action)

_UNIT = {0: (1, 0), 1: (-1, 0), 2: (0, 1), 3: (0, -1)}


@dataclass(frozen=True)
class GameEvent:
    seq: int
    source: str
    tick: int
    payload: int
    actor: int

    def __post_init__(self):
        if self.tick < 0:
            raise ValueError("event tick must be >= 0")

    @property
    def key(self) -> tuple[int, str, int]:
        return (self.tick, self.source, self.seq)


@dataclass(frozen=True)
class ActorState:
    x: int = 0
    y: int = 0
    vx: int = 0
    vy: int = 0
    score: int = 0

    @property
    def position(self) -> Position:
        return Position(float(self.x), float(self.y))

    @property
    def velocity(self) -> tuple[int, int]:
        return (self.vx, self.vy)


@dataclass(frozen=True)
class GameState:
    actors: Mapping[int, ActorState] = field(default_factory=lambda: MappingProxyType({}))
    event_count: int = 0

    def __post_init__(self):
        ordered = {a: self.actors[a] for a in sorted(self.actors)}
        object.__setattr__(self, "actors", MappingProxyType(ordered))

    @classmethod
    def initial(cls, actor_ids: Iterable[int]) -> GameState:
        return cls({a: ActorState() for a in actor_ids}, 0)

    def __eq__(self, other):
        if not isinstance(other, GameState):
            return NotImplemented
        return dict(self.actors) == dict(other.actors) and self.event_count == other.event_count

    __hash__ = None  # type: ignore[assignment]


def step_actor(a: ActorState, payload: int) -> ActorState:
    """Transition of one actor under one action code."""
    if payload in _UNIT:
        dx, dy = _UNIT[payload]
        return replace(a, x=a.x + dx, y=a.y + dy)
    if 4 <= payload <= 7:
        dx, dy = _UNIT[payload - 4]
        return replace(a, vx=a.vx + dx, vy=a.vy + dy)
    if payload == Action.SCORE:
        return replace(a, score=a.score + 1)
    if payload == Action.ADVANCE:
        return replace(a, x=a.x + a.vx, y=a.y + a.vy)
    raise ValueError(f"unknown action code {payload}")


def order_events(events: Iterable[GameEvent]) -> list[GameEvent]:
    events = list(events)
    seen = set()
    for e in events:
        ident = (e.source, e.seq)
        if ident in seen:
            raise ValueError(f"duplicate event {ident}")
        seen.add(ident)
    return sorted(events, key=lambda e: e.key)


def apply_events(s: GameState, ordered: Sequence[GameEvent]) -> GameState:
    if not ordered:
        return s
    actors = dict(s.actors)
    for e in ordered:
        if e.actor not in actors:
            raise KeyError(f"event {e.source}:{e.seq} references unknown actor {e.actor}")
        actors[e.actor] = step_actor(actors[e.actor], e.payload)
    return GameState(actors, s.event_count + len(ordered))


def serialize_state(s: GameState) -> bytes:
    parts = []
    for aid, a in s.actors.items():
        parts.append(struct.pack("<6q", aid, a.x, a.y, a.vx, a.vy, a.score))
    parts.append(struct.pack("<q", s.event_count))
    return b"".join(parts)


def state_digest(s: GameState) -> int:
    return kernels.fnv1a64(serialize_state(s))


def check_consistency(digests: Sequence[int]) -> bool:
    if not digests:
        raise ValueError("no digests to compare")
    first = digests[0]
    return all(d == first for d in digests)


# -- dead reckoning --------------------------------------------------------------


def dr_should_send(
    actual: Position,
    last_sent: Position,
    last_sent_velocity: tuple[float, float],
    elapsed: float,
    threshold: float,
) -> bool:
    """True when first-order extrapolation has drifted beyond ``threshold``."""
    if elapsed < 0 or threshold < 0:
        raise ValueError("elapsed and threshold must be >= 0")
    vx, vy = last_sent_velocity
    predicted = Position(last_sent.x + vx * elapsed, last_sent.y + vy * elapsed)
    return euclidean_distance(actual, predicted) > threshold


@dataclass
class DeadReckoningFilter:
    """Sender-side suppression of updates a receiver can extrapolate."""

    threshold: float
    last: tuple[Position, tuple[float, float], int] | None = None
    sent: int = 0
    suppressed: int = 0

    def __post_init__(self):
        if self.threshold < 0:
            raise ValueError("threshold must be >= 0")

    def offer(self, position: Position, velocity: tuple[float, float], tick: int) -> bool:
        """Record the actor's true state at ``tick``; return whether to send."""
        if self.last is None:
            send = True
        else:
            pos, vel, t0 = self.last
            send = dr_should_send(position, pos, vel, tick - t0, self.threshold)
        if send:
            self.last = (position, velocity, tick)
            self.sent += 1
        else:
            self.suppressed += 1
        return send


def count_sends(trajectory: Sequence[tuple[Position, tuple[float, float]]], threshold: float) -> int:
    """Updates sent for a per-tick ``(position, velocity)`` trajectory."""
    f = DeadReckoningFilter(threshold)
    for t, (pos, vel) in enumerate(trajectory):
        f.offer(pos, vel, t)
    return f.sent

