"""Fishing Reel depth control and the RAWR-XD wrist-tilt speed multiplier.

The reeled object lives on the selecting controller's ray at depth ``t``;
a signed axis moves it in and out. RAWR-XD adds a second hand: rolling
the non-selecting wrist scales the reel speed between 0.5x (full left tilt)
and 5x (full right tilt), with 1x at the neutral wrist so that an untouched
wrist reproduces the plain Fishing Reel.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Optional

from .geometry import Pose, Ray, UnitQuaternion, roll_about_forward
from .homer import Attempt, TechniqueEvent
from .rng import AimNoise
from .scene import ObjectKind, Scene
from .selection import DEFAULT_MAX_RANGE, ray_select

MIN_MULTIPLIER = 0.5
MAX_MULTIPLIER = 5.0
NEUTRAL_MULTIPLIER = 1.0
THETA_MAX = math.radians(60.0)
T_MIN = 0.25
T_MAX = 200.0
BASE_SPEED = 2.0


def wrist_multiplier(roll: float, theta_max: float = THETA_MAX) -> float:
    """Reel-speed multiplier for a signed wrist roll (radians, right positive).

    Two linear segments meeting at 1.0 for zero roll, saturating at
    ``-theta_max`` (0.5) and ``+theta_max`` (5.0).
    """
    if not math.isfinite(roll):
        raise ValueError("roll must be finite")
    if roll >= theta_max:
        return MAX_MULTIPLIER
    if roll <= -theta_max:
        return MIN_MULTIPLIER
    if roll >= 0.0:
        return NEUTRAL_MULTIPLIER + (roll / theta_max) * (MAX_MULTIPLIER - NEUTRAL_MULTIPLIER)
    return NEUTRAL_MULTIPLIER + (roll / theta_max) * (NEUTRAL_MULTIPLIER - MIN_MULTIPLIER)


def slider_value(multiplier: float) -> float:
    return (multiplier - MIN_MULTIPLIER) / (MAX_MULTIPLIER - MIN_MULTIPLIER)


@dataclass(frozen=True)
class WristModulation:
    roll: float
    multiplier: float
    slider_value: float

    @classmethod
    def from_roll(cls, roll: float, theta_max: float = THETA_MAX) -> WristModulation:
        m = wrist_multiplier(roll, theta_max)
        return cls(roll, m, slider_value(m))

    @classmethod
    def neutral(cls) -> WristModulation:
        return cls.from_roll(0.0)


@dataclass(frozen=True)
class ReelState:
    object_id: str
    ray: Ray
    t: float
    base_speed: float = BASE_SPEED
    t_min: float = T_MIN
    t_max: float = T_MAX

    def __post_init__(self) -> None:
        if not self.base_speed > 0.0:
            raise ValueError("base_speed must be positive")
        if not self.t_min <= self.t <= self.t_max:
            raise ValueError(f"t={self.t} outside [{self.t_min}, {self.t_max}]")

    @property
    def position(self):
        return self.ray.at(self.t)


def reel_tick(state: ReelState, reel_input: float, modulation: WristModulation, dt: float,
              ray: Optional[Ray] = None) -> ReelState:
    """Move the object along the (optionally re-aimed) ray for one frame."""
    if not dt > 0.0:
        raise ValueError("non-positive timestep")
    if not -1.0 <= reel_input <= 1.0:
        raise ValueError("reel_input must lie in [-1, 1]")
    t = state.t + reel_input * state.base_speed * modulation.multiplier * dt
    t = min(max(t, state.t_min), state.t_max)
    return dataclasses.replace(state, t=t, ray=ray if ray is not None else state.ray)


@dataclass
class RawrXdConfig:
    theta_max: float = THETA_MAX
    base_speed: float = BASE_SPEED
    t_min: float = T_MIN
    t_max: float = T_MAX
    mirror: bool = False
    max_range: float = DEFAULT_MAX_RANGE


@dataclass
class RawrXdState:
    config: RawrXdConfig = field(default_factory=RawrXdConfig)
    reel: Optional[ReelState] = None
    wrist_reference: Optional[UnitQuaternion] = None
    modulation: WristModulation = field(default_factory=WristModulation.neutral)
    trigger_down: bool = False
    events: list = field(default_factory=list)
    last_attempt: Optional[Attempt] = None

    @property
    def idle(self) -> bool:
        return self.reel is None


def wrist_roll(state: RawrXdState, non_selecting: Pose) -> float:
    roll = roll_about_forward(non_selecting.orientation, state.wrist_reference)
    return -roll if state.config.mirror else roll


def rawr_xd_tick(state: RawrXdState, selecting: Pose, non_selecting: Pose, trigger: bool,
                 reel_input: float, scene: Scene, dt: float,
                 noise: Optional[AimNoise] = None) -> tuple[RawrXdState, Scene]:
    """Advance RAWR-XD by one frame.

    Idle --press--> ray select --hit--> Reeling (t = hit distance, wrist
    reference captured) --held--> reel_tick --release--> commit --> Idle.
    Only medication can be reeled.
    """
    if not dt > 0.0:
        raise ValueError("non-positive timestep")
    state.events = []
    state.last_attempt = None
    pressed = trigger and not state.trigger_down
    state.trigger_down = trigger
    cfg = state.config

    if state.reel is None:
        if not pressed:
            return state, scene
        aim, deviation = selecting, 0.0
        if noise is not None:
            turned, deviation = noise.perturb(selecting.orientation)
            aim = Pose(selecting.position, turned)
        result = ray_select(Ray.from_pose(aim), scene, kinds=(ObjectKind.MEDICATION,),
                            max_range=cfg.max_range)
        state.last_attempt = Attempt("rawr_xd", result, deviation)
        if not result.hit:
            state.events.append((TechniqueEvent.MISSED, None))
            return state, scene
        t = min(max(result.score, cfg.t_min), cfg.t_max)
        # noise only decides what gets picked; the reel follows the held controller
        state.reel = ReelState(result.object_id, Ray.from_pose(selecting), t,
                               cfg.base_speed, cfg.t_min, cfg.t_max)
        state.wrist_reference = non_selecting.orientation
        state.modulation = WristModulation.neutral()
        scene[result.object_id].position = state.reel.position
        state.events.append((TechniqueEvent.SELECTED, result.object_id))
        return state, scene

    state.modulation = WristModulation.from_roll(wrist_roll(state, non_selecting), cfg.theta_max)
    state.reel = reel_tick(state.reel, reel_input, state.modulation, dt, Ray.from_pose(selecting))
    scene[state.reel.object_id].position = state.reel.position
    if not trigger:
        release_reel(state, scene)
    return state, scene


def release_reel(state: RawrXdState, scene: Scene) -> None:
    if state.reel is None:
        return
    object_id = state.reel.object_id
    scene[object_id].position = state.reel.position
    state.reel = None
    state.wrist_reference = None
    state.modulation = WristModulation.neutral()
    state.events.append((TechniqueEvent.RELEASED, object_id))
