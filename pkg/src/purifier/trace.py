"""Scripted players: keyframed input traces replayed tick by tick.

A keyframe belongs to one route leg and fires ``at`` ticks after the rover
arrives at that leg's stop. Fields left out of a keyframe carry over from
the previous keyframe of the same leg (or the defaults). A keyframe with
``"lerp": true`` is approached linearly from the previous one; otherwise
values step. Buttons always step.

Pose fields (``head`` is a bare position)::

    {"position": [x, y, z], "aim": [x, y, z], "roll_deg": 0}
    {"position": [x, y, z], "orientation": [w, x, y, z]}

``aim`` is a look-at point. ``roll_deg`` twists about the resulting forward
axis, right-positive. All coordinates are in the rover frame.
"""
from __future__ import annotations

import math
from typing import Optional

from .geometry import FORWARD, Pose, UnitQuaternion, Vector3
from .sync import InputFrame, Role

DEFAULT_HEAD = (0.0, 1.7, 0.0)
DEFAULT_PRIMARY = (0.25, 1.4, -0.3)
DEFAULT_SECONDARY = (-0.25, 1.4, -0.3)


def _initial_state() -> dict:
    return {
        "head": list(DEFAULT_HEAD),
        "primary": {"position": list(DEFAULT_PRIMARY)},
        "secondary": {"position": list(DEFAULT_SECONDARY)},
        "trigger": False,
        "reel": 0.0,
    }


def _merge(state: dict, keyframe: dict) -> dict:
    out = {
        "head": list(keyframe.get("head", state["head"])),
        "trigger": keyframe.get("trigger", state["trigger"]),
        "reel": float(keyframe.get("reel", state["reel"])),
    }
    for hand in ("primary", "secondary"):
        merged = dict(state[hand])
        spec = keyframe.get(hand, {})
        if "aim" in spec:
            merged.pop("orientation", None)
        if "orientation" in spec:
            merged.pop("aim", None)
        merged.update(spec)
        out[hand] = merged
    return out


def resolve_pose(spec: dict) -> Pose:
    position = Vector3.of(spec["position"])
    if "orientation" in spec:
        orientation = UnitQuaternion.of(spec["orientation"])
    elif "aim" in spec:
        orientation = UnitQuaternion.look_rotation(Vector3.of(spec["aim"]) - position)
    else:
        orientation = UnitQuaternion.identity()
    roll = spec.get("roll_deg", 0.0)
    if roll:
        orientation = orientation * UnitQuaternion.from_axis_angle(FORWARD, math.radians(roll))
    return Pose(position, orientation)


def _lerp_vec(a: Vector3, b: Vector3, u: float) -> Vector3:
    return a + (b - a) * u


def _nlerp(a: UnitQuaternion, b: UnitQuaternion, u: float) -> UnitQuaternion:
    if a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z < 0.0:
        b = UnitQuaternion(-b.w, -b.x, -b.y, -b.z)
    return UnitQuaternion(a.w + (b.w - a.w) * u, a.x + (b.x - a.x) * u,
                          a.y + (b.y - a.y) * u, a.z + (b.z - a.z) * u).normalized()


def _lerp_pose(a: Pose, b: Pose, u: float) -> Pose:
    return Pose(_lerp_vec(a.position, b.position, u), _nlerp(a.orientation, b.orientation, u))


class ScriptedPlayer:
    def __init__(self, role: Role, keyframes: list[dict] = ()):
        self.role = Role(role)
        self._legs: dict[int, list[tuple[int, dict, bool]]] = {}
        by_leg: dict[int, list[dict]] = {}
        for kf in keyframes:
            by_leg.setdefault(kf["leg"], []).append(kf)
        for leg, frames in by_leg.items():
            frames.sort(key=lambda k: k["at"])
            state = _initial_state()
            resolved = [(0, state, False)]
            for kf in frames:
                state = _merge(state, kf)
                resolved.append((kf["at"], state, bool(kf.get("lerp", False))))
            self._legs[leg] = resolved
        self._idle = _initial_state()

    def _frame(self, tick: int, state: dict, pose_override: Optional[tuple] = None) -> InputFrame:
        if pose_override is None:
            head = Pose(Vector3.of(state["head"]))
            primary, secondary = resolve_pose(state["primary"]), resolve_pose(state["secondary"])
        else:
            head, primary, secondary = pose_override
        return InputFrame(tick, self.role, head, primary, secondary,
                          bool(state["trigger"]), state["reel"])

    def frame(self, tick: int, leg: Optional[int], since_arrival: Optional[int]) -> InputFrame:
        """Input for ``tick`` given the current stop (``leg``) and ticks since arrival there."""
        if leg is None or leg not in self._legs:
            return self._frame(tick, self._idle)
        frames = self._legs[leg]
        index = 0
        for i, f in enumerate(frames):
            if f[0] <= since_arrival:
                index = i
        current = frames[index]
        if index + 1 < len(frames) and frames[index + 1][2]:
            nxt_at, nxt, _ = frames[index + 1]
            span = nxt_at - current[0]
            u = (since_arrival - current[0]) / span if span else 1.0
            poses = tuple(
                _lerp_pose(a, b, u) for a, b in (
                    (Pose(Vector3.of(current[1]["head"])), Pose(Vector3.of(nxt["head"]))),
                    (resolve_pose(current[1]["primary"]), resolve_pose(nxt["primary"])),
                    (resolve_pose(current[1]["secondary"]), resolve_pose(nxt["secondary"])),
                )
            )
            return self._frame(tick, current[1], poses)
        return self._frame(tick, current[1])
