"""Environment data model and the purifying-rover state machine.

The rover drives a fixed route. At each stop it opens its shield for a
limited time; it leaves early once every objective at that stop has been
resolved, and otherwise leaves when the shield timer runs out. Objectives
left behind stay ``ACTIVE`` but are forfeited: no technique may select them
again.
"""
from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass, field
from typing import Iterable, Union

from .geometry import UnitQuaternion, Vector3

DEFAULT_TRAVEL_SPEED = 5.0
DEFAULT_SHIELD_OPEN_DURATION = 60.0
DEFAULT_CAPTURE_RADIUS = 0.75
DEFAULT_FEED_RADIUS = 1.0


class ObjectKind(str, enum.Enum):
    TRASH = "trash"
    WILDLIFE = "wildlife"
    MEDICATION = "medication"


class ObjectStatus(str, enum.Enum):
    ACTIVE = "active"
    COLLECTED = "collected"
    HEALED = "healed"
    CONSUMED = "consumed"


_TERMINAL_STATUS = {
    ObjectKind.TRASH: ObjectStatus.COLLECTED,
    ObjectKind.WILDLIFE: ObjectStatus.HEALED,
    ObjectKind.MEDICATION: ObjectStatus.CONSUMED,
}


@dataclass
class SceneObject:
    id: str
    kind: ObjectKind
    position: Vector3
    bounding_radius: float
    orientation: UnitQuaternion = UnitQuaternion.identity()
    status: ObjectStatus = ObjectStatus.ACTIVE

    def __post_init__(self) -> None:
        if not self.bounding_radius > 0.0:
            raise ValueError(f"object {self.id!r}: bounding radius must be positive")
        self.kind = ObjectKind(self.kind)
        self.status = ObjectStatus(self.status)

    @property
    def active(self) -> bool:
        return self.status is ObjectStatus.ACTIVE

    def resolve(self) -> None:
        """Move to the kind's single terminal status. Only legal from ACTIVE."""
        if not self.active:
            raise ValueError(f"object {self.id!r} already {self.status.value}")
        self.status = _TERMINAL_STATUS[self.kind]


@dataclass(frozen=True)
class RouteLeg:
    waypoint: Vector3
    shield_open_duration: float = DEFAULT_SHIELD_OPEN_DURATION
    objective_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.shield_open_duration > 0.0:
            raise ValueError("shield_open_duration must be positive")
        object.__setattr__(self, "objective_ids", tuple(self.objective_ids))


class Scene:
    """Objects plus the route. Owned by a single simulation loop."""

    def __init__(self, objects: Iterable[SceneObject] = (), route: Iterable[RouteLeg] = ()):
        self.objects: dict[str, SceneObject] = {}
        for obj in objects:
            if obj.id in self.objects:
                raise ValueError(f"duplicate object id {obj.id!r}")
            self.objects[obj.id] = obj
        self.route: list[RouteLeg] = list(route)
        for i, leg in enumerate(self.route):
            for oid in leg.objective_ids:
                if oid not in self.objects:
                    raise ValueError(f"route leg {i}: unknown object id {oid!r}")
        self.forfeited: set[str] = set()
        self.trash_collected = 0
        self.wildlife_healed = 0
        self.initial_trash = self.count(ObjectKind.TRASH)
        self.initial_wildlife = self.count(ObjectKind.WILDLIFE)

    def __getitem__(self, object_id: str) -> SceneObject:
        try:
            return self.objects[object_id]
        except KeyError:
            raise KeyError(f"unknown object id {object_id!r}") from None

    def count(self, kind: ObjectKind, status: ObjectStatus | None = None) -> int:
        return sum(
            1 for o in self.objects.values()
            if o.kind is kind and (status is None or o.status is status)
        )

    def selectable(self) -> list[SceneObject]:
        """Active, non-forfeited objects in insertion order."""
        return [o for o in self.objects.values() if o.active and o.id not in self.forfeited]

    def copy(self) -> Scene:
        clone = Scene.__new__(Scene)
        clone.objects = {k: dataclasses.replace(v) for k, v in self.objects.items()}
        clone.route = list(self.route)
        clone.forfeited = set(self.forfeited)
        clone.trash_collected = self.trash_collected
        clone.wildlife_healed = self.wildlife_healed
        clone.initial_trash = self.initial_trash
        clone.initial_wildlife = self.initial_wildlife
        return clone


@dataclass(frozen=True)
class RunSummary:
    trash_collected: int = 0
    wildlife_healed: int = 0
    stops_fully_cleared: int = 0
    total_ticks: int = 0


@dataclass(frozen=True)
class Traveling:
    leg_index: int


@dataclass(frozen=True)
class Stopped:
    leg_index: int
    remaining_time: float


@dataclass(frozen=True)
class Completed:
    pass


Phase = Union[Traveling, Stopped, Completed]


@dataclass(frozen=True)
class RoverState:
    phase: Phase
    position: Vector3
    travel_speed: float = DEFAULT_TRAVEL_SPEED
    summary: RunSummary = field(default_factory=RunSummary)

    @property
    def completed(self) -> bool:
        return isinstance(self.phase, Completed)

    @property
    def shield_open(self) -> bool:
        return isinstance(self.phase, Stopped)


def start_rover(scene: Scene, position: Vector3 = Vector3.zero(),
                travel_speed: float = DEFAULT_TRAVEL_SPEED) -> RoverState:
    if not travel_speed > 0.0:
        raise ValueError("travel_speed must be positive")
    if not scene.route:
        return RoverState(Completed(), position, travel_speed)
    return RoverState(Traveling(0), position, travel_speed)


def objectives_resolved(scene: Scene, leg: RouteLeg, completions: Iterable[str] = ()) -> bool:
    """True when the leg has objectives and every one of them is resolved.

    A leg with no objectives is never "resolved": its stop lasts for the
    full shield window.
    """
    if not leg.objective_ids:
        return False
    done = set(completions)
    return all(oid in done or not scene[oid].active for oid in leg.objective_ids)


def rover_step(state: RoverState, scene: Scene, dt: float,
               completions: Iterable[str] = ()) -> RoverState:
    if not dt > 0.0:
        raise ValueError("non-positive timestep")
    if state.completed:
        return state

    summary = dataclasses.replace(
        state.summary,
        trash_collected=scene.trash_collected,
        wildlife_healed=scene.wildlife_healed,
        total_ticks=state.summary.total_ticks + 1,
    )
    phase = state.phase

    if isinstance(phase, Traveling):
        leg = scene.route[phase.leg_index]
        to_go = leg.waypoint - state.position
        distance = to_go.length()
        reach = state.travel_speed * dt
        if distance <= reach:
            return RoverState(Stopped(phase.leg_index, leg.shield_open_duration),
                              leg.waypoint, state.travel_speed, summary)
        position = state.position + to_go * (reach / distance)
        return RoverState(phase, position, state.travel_speed, summary)

    assert isinstance(phase, Stopped)
    leg = scene.route[phase.leg_index]
    cleared = objectives_resolved(scene, leg, completions)
    remaining = max(0.0, phase.remaining_time - dt)
    if not cleared and remaining > 0.0:
        return RoverState(Stopped(phase.leg_index, remaining), state.position,
                          state.travel_speed, summary)

    # leaving this stop
    for oid in leg.objective_ids:
        if scene[oid].active and oid not in completions:
            scene.forfeited.add(oid)
    if cleared:
        summary = dataclasses.replace(summary, stops_fully_cleared=summary.stops_fully_cleared + 1)
    next_leg = phase.leg_index + 1
    if next_leg >= len(scene.route):
        return RoverState(Completed(), state.position, state.travel_speed, summary)
    return RoverState(Traveling(next_leg), state.position, state.travel_speed, summary)


def try_collect(scene: Scene, object_id: str, bin_position: Vector3,
                capture_radius: float = DEFAULT_CAPTURE_RADIUS) -> bool:
    """Drop a trash object into the bin if it lies within the capture ball.

    Mutates ``scene`` on success and returns whether the object was collected.
    """
    obj = scene[object_id]
    if obj.kind is not ObjectKind.TRASH:
        raise ValueError(f"object {object_id!r} is not collectible")
    if not obj.active or obj.position.distance_to(bin_position) > capture_radius:
        return False
    obj.resolve()
    scene.trash_collected += 1
    return True


def try_medicate(scene: Scene, medication_id: str, wildlife_id: str,
                 feed_radius: float = DEFAULT_FEED_RADIUS) -> bool:
    medication, animal = scene[medication_id], scene[wildlife_id]
    if medication.kind is not ObjectKind.MEDICATION or animal.kind is not ObjectKind.WILDLIFE:
        raise ValueError(f"invalid pairing: {medication_id!r} -> {wildlife_id!r}")
    if not (medication.active and animal.active):
        return False
    if medication.position.distance_to(animal.position) > feed_radius:
        return False
    medication.resolve()
    animal.resolve()
    scene.wildlife_healed += 1
    return True
