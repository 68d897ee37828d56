"""HOMER hand-centred manipulation and the FLOW-MATCH technique.

HOMER maps the hand onto the object with a scale fixed at grab time::

    scale  = |object - user| / |controller - user|
    offset = object - (user + scale * (controller - user))
    object = user + scale * (controller - user) + offset

``scale`` and ``offset`` are captured once when the object is grabbed; later
frames reuse them with the live user and controller positions. The offset
makes the mapping exact at the grab instant, so the object does not jump.

FLOW-MATCH swaps HOMER's thin selection ray for a Flashlight cone and keeps
the hand-centred manipulation.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

from .geometry import Cone, Pose, UnitQuaternion, Vector3
from .rng import AimNoise
from .scene import ObjectKind, Scene, SceneObject
from .selection import DEFAULT_MAX_RANGE, SelectionResult, flashlight_select

TORSO_OFFSET = 0.25
MIN_CONTROLLER_OFFSET = 1e-6


def torso_anchor(head: Pose, offset: float = TORSO_OFFSET) -> Pose:
    """The user's manipulation anchor: the head dropped by ``offset`` metres."""
    return Pose(head.position - Vector3(0.0, offset, 0.0), head.orientation)


@dataclass
class HomerGrabState:
    # scale and offset are never reassigned after construction
    object_id: str
    scale: float
    offset: Vector3
    user_anchor: Vector3
    grab_controller_orientation: UnitQuaternion
    grab_object_position: Vector3
    grab_object_orientation: UnitQuaternion = UnitQuaternion.identity()
    object_pose: Optional[Pose] = None
    released: bool = False

    def __post_init__(self) -> None:
        if self.object_pose is None:
            self.object_pose = Pose(self.grab_object_position, self.grab_object_orientation)


def homer_grab(user_pose: Pose, controller_pose: Pose, obj: SceneObject) -> HomerGrabState:
    if not obj.active:
        raise ValueError(f"object {obj.id!r} not grabbable")
    user = user_pose.position
    to_controller = controller_pose.position - user
    hand_reach = to_controller.length()
    if hand_reach <= MIN_CONTROLLER_OFFSET:
        raise ValueError("degenerate controller offset")
    scale = (obj.position - user).length() / hand_reach
    offset = obj.position - (user + to_controller * scale)
    return HomerGrabState(
        object_id=obj.id,
        scale=scale,
        offset=offset,
        user_anchor=user,
        grab_controller_orientation=controller_pose.orientation,
        grab_object_position=obj.position,
        grab_object_orientation=obj.orientation,
    )


def homer_update(state: HomerGrabState, user_pose: Pose, controller_pose: Pose) -> Pose:
    """Object pose for the current user and controller poses.

    Rotation is mapped 1:1: the controller's rotation since the grab is
    applied to the object's grab orientation.
    """
    user = user_pose.position
    position = user + (controller_pose.position - user) * state.scale + state.offset
    if controller_pose.orientation == state.grab_controller_orientation:
        orientation = state.grab_object_orientation
    else:
        delta = controller_pose.orientation * state.grab_controller_orientation.conjugate()
        orientation = (delta * state.grab_object_orientation).normalized()
    state.object_pose = Pose(position, orientation)
    return state.object_pose


def homer_release(state: HomerGrabState, scene: Scene) -> Scene:
    if state.released:
        raise RuntimeError("stale grab state")
    obj = scene[state.object_id]
    obj.position = state.object_pose.position
    obj.orientation = state.object_pose.orientation
    state.released = True
    return scene


class TechniqueEvent(str, enum.Enum):
    SELECTED = "selected"
    MISSED = "missed"
    RELEASED = "released"


@dataclass(frozen=True)
class Attempt:
    """One trigger press that tried to select something."""

    technique: str
    result: SelectionResult
    deviation: float


@dataclass
class FlowMatchConfig:
    half_angle: float = math.radians(10.0)
    torso_offset: float = TORSO_OFFSET
    max_range: float = DEFAULT_MAX_RANGE


@dataclass
class FlowMatchState:
    config: FlowMatchConfig = field(default_factory=FlowMatchConfig)
    grab: Optional[HomerGrabState] = None
    trigger_down: bool = False
    events: list = field(default_factory=list)
    last_attempt: Optional[Attempt] = None

    @property
    def idle(self) -> bool:
        return self.grab is None


def flow_match_tick(state: FlowMatchState, head_pose: Pose, controller_pose: Pose,
                    trigger: bool, scene: Scene, noise: Optional[AimNoise] = None,
                    ) -> tuple[FlowMatchState, Scene]:
    """Advance FLOW-MATCH by one frame.

    Idle --press--> cone select --hit--> Grabbing --held--> HOMER update
    --release--> commit --> Idle. Only trash can be picked up.
    """
    state.events = []
    state.last_attempt = None
    pressed = trigger and not state.trigger_down
    state.trigger_down = trigger
    user = torso_anchor(head_pose, state.config.torso_offset)

    if state.grab is None:
        if not pressed:
            return state, scene
        aim, deviation = controller_pose, 0.0
        if noise is not None:
            turned, deviation = noise.perturb(controller_pose.orientation)
            aim = Pose(controller_pose.position, turned)
        cone = Cone.from_pose(aim, state.config.half_angle)
        result = flashlight_select(cone, scene, kinds=(ObjectKind.TRASH,),
                                   max_range=state.config.max_range)
        state.last_attempt = Attempt("flow_match", result, deviation)
        if not result.hit:
            state.events.append((TechniqueEvent.MISSED, None))
            return state, scene
        state.grab = homer_grab(user, controller_pose, scene[result.object_id])
        state.events.append((TechniqueEvent.SELECTED, result.object_id))
        return state, scene

    pose = homer_update(state.grab, user, controller_pose)
    obj = scene[state.grab.object_id]
    obj.position, obj.orientation = pose.position, pose.orientation
    if not trigger:
        release_grab(state, scene)
    return state, scene


def release_grab(state: FlowMatchState, scene: Scene) -> None:
    grab = state.grab
    if grab is None:
        return
    homer_release(grab, scene)
    state.grab = None
    state.events.append((TechniqueEvent.RELEASED, grab.object_id))
