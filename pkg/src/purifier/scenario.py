"""Scenario files: JSON schema, validation, and parsing.

Scenario JSON (``schema_version`` 1)::

    {
      "schema_version": 1,
      "name": "demo",
      "seed": 7,                       # optional; see resolve_seed()
      "tick_rate": 90,
      "rover": {"start": [0, 0, 0], "travel_speed": 5.0},
      "bin": {"position": [0, 1, 0.6], "capture_radius": 0.75},
      "feed_radius": 1.0,
      "objects": [{"id": "t1", "kind": "trash", "position": [...], "radius": 0.3}],
      "route": [{"waypoint": [...], "shield_open_duration": 60, "objectives": ["t1"]}],
      "flow_match": {"half_angle_deg": 10, "torso_offset": 0.25, "max_range": 200},
      "rawr_xd": {"theta_max_deg": 60, "base_speed": 2, "t_min": 0.25, "t_max": 200,
                  "mirror": false, "max_range": 200},
      "noise": {"sigma_deg": 0.0},
      "traces": {"collector": [KEYFRAME...], "medic": [KEYFRAME...]},
      "benchmarks": [{"kind": "select", ...}, {"kind": "reel", ...}]
    }

Player poses in traces are in the rover's frame (the players ride the
rover), as is the bin position. See :mod:`purifier.trace` for keyframes.
"""
from __future__ import annotations

import copy
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import jsonschema

from .geometry import UnitQuaternion, Vector3
from .homer import FlowMatchConfig
from .reel import RawrXdConfig
from .scene import (DEFAULT_CAPTURE_RADIUS, DEFAULT_FEED_RADIUS, DEFAULT_SHIELD_OPEN_DURATION,
                    DEFAULT_TRAVEL_SPEED, RouteLeg, SceneObject)
from .sync import canonical_json, fnv1a64

SCHEMA_VERSION = 1
DEFAULT_TICK_RATE = 90.0
DEFAULT_MAX_TICKS = 1_000_000
SEED_ENV = "PURIFIER_SEED"

_vec3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_quat = {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4}
_pos = {"type": "number", "exclusiveMinimum": 0}
_pose_spec = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "position": _vec3,
        "aim": _vec3,
        "orientation": _quat,
        "roll_deg": {"type": "number"},
    },
}
_keyframe = {
    "type": "object",
    "additionalProperties": False,
    "required": ["leg", "at"],
    "properties": {
        "leg": {"type": "integer", "minimum": 0},
        "at": {"type": "integer", "minimum": 0},
        "head": _vec3,
        "primary": _pose_spec,
        "secondary": _pose_spec,
        "trigger": {"type": "boolean"},
        "reel": {"type": "number", "minimum": -1, "maximum": 1},
        "lerp": {"type": "boolean"},
    },
}
_benchmark = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["select", "reel"]},
        "technique": {"enum": ["ray", "flashlight", "fishing-reel", "rawr-xd"]},
        "distance": _pos,
        "target_radius": {"type": "number", "minimum": 0},
        "sigma_deg": {"type": "number", "minimum": 0},
        "half_angle_deg": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 90},
        "attempts": {"type": "integer", "minimum": 1},
        "start": {"type": "number"},
        "tilt_deg": {"type": "number"},
        "base_speed": _pos,
    },
}

SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "objects", "route"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "tick_rate": _pos,
        "max_ticks": {"type": "integer", "minimum": 1},
        "digest_interval": {"type": "integer", "minimum": 1},
        "rover": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"start": _vec3, "travel_speed": _pos},
        },
        "bin": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"position": _vec3, "capture_radius": _pos},
        },
        "feed_radius": _pos,
        "objects": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["id", "kind", "position", "radius"],
                "properties": {
                    "id": {"type": "string", "minLength": 1},
                    "kind": {"enum": ["trash", "wildlife", "medication"]},
                    "position": _vec3,
                    "radius": _pos,
                    "orientation": _quat,
                },
            },
        },
        "route": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["waypoint"],
                "properties": {
                    "waypoint": _vec3,
                    "shield_open_duration": _pos,
                    "objectives": {"type": "array", "items": {"type": "string"}},
                },
            },
        },
        "flow_match": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "half_angle_deg": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 90},
                "torso_offset": {"type": "number", "minimum": 0},
                "max_range": _pos,
            },
        },
        "rawr_xd": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "theta_max_deg": {"type": "number", "exclusiveMinimum": 0, "maximum": 180},
                "base_speed": _pos,
                "t_min": {"type": "number", "minimum": 0},
                "t_max": _pos,
                "mirror": {"type": "boolean"},
                "max_range": _pos,
            },
        },
        "noise": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"sigma_deg": {"type": "number", "minimum": 0}},
        },
        "traces": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "collector": {"type": "array", "items": _keyframe},
                "medic": {"type": "array", "items": _keyframe},
            },
        },
        "benchmarks": {"type": "array", "items": _benchmark},
    },
}


class ScenarioError(ValueError):
    """Invalid scenario. ``str()`` is ``source:line: path: message``."""

    def __init__(self, message: str, source: str = "<scenario>", line: Optional[int] = None,
                 path: str = ""):
        self.message, self.source, self.line, self.path = message, source, line, path
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {path + ': ' if path else ''}{message}")


def value_lines(text: str) -> dict[tuple, int]:
    """Map each JSON value's path (tuple of keys/indices) to its 1-based line."""
    lines: dict[tuple, int] = {}
    pos, line, n = 0, 1, len(text)

    def skip_ws() -> None:
        nonlocal pos, line
        while pos < n and text[pos] in " \t\r\n":
            if text[pos] == "\n":
                line += 1
            pos += 1

    def read_string() -> str:
        nonlocal pos
        start = pos
        pos += 1
        while text[pos] != '"':
            pos += 2 if text[pos] == "\\" else 1
        pos += 1
        return json.loads(text[start:pos])

    def value(path: tuple) -> None:
        nonlocal pos
        skip_ws()
        lines[path] = line
        ch = text[pos]
        if ch == "{":
            pos += 1
            skip_ws()
            if text[pos] == "}":
                pos += 1
                return
            while True:
                skip_ws()
                key = read_string()
                skip_ws()
                pos += 1  # colon
                value(path + (key,))
                skip_ws()
                ch = text[pos]
                pos += 1
                if ch == "}":
                    return
        elif ch == "[":
            pos += 1
            skip_ws()
            if text[pos] == "]":
                pos += 1
                return
            i = 0
            while True:
                value(path + (i,))
                skip_ws()
                ch = text[pos]
                pos += 1
                i += 1
                if ch == "]":
                    return
        elif ch == '"':
            read_string()
        else:
            while pos < n and text[pos] not in ",]} \t\r\n":
                pos += 1

    value(())
    return lines


def _path_str(path) -> str:
    out = ""
    for part in path:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out or "<root>"


def _line_for(lines: dict[tuple, int], path: tuple) -> Optional[int]:
    path = tuple(path)
    while path not in lines and path:
        path = path[:-1]
    return lines.get(path)


@dataclass
class Scenario:
    raw: dict
    name: str
    seed: int
    tick_rate: float
    max_ticks: int
    digest_interval: int
    rover_start: Vector3
    travel_speed: float
    bin_position: Vector3
    capture_radius: float
    feed_radius: float
    objects: list[SceneObject]
    route: list[RouteLeg]
    flow_match: FlowMatchConfig
    rawr_xd: RawrXdConfig
    sigma: float
    traces: dict[str, list[dict]] = field(default_factory=dict)
    benchmarks: list[dict] = field(default_factory=list)

    @property
    def dt(self) -> float:
        return 1.0 / self.tick_rate

    @property
    def scenario_id(self) -> str:
        """Content hash of the effective scenario; both sync peers must agree on it."""
        return f"{self.name}:{fnv1a64(canonical_json(self.raw).encode('utf-8')):016x}"

    def build_objects(self) -> list[SceneObject]:
        return copy.deepcopy(self.objects)


def resolve_seed(file_seed: Optional[int], flag_seed: Optional[int] = None) -> int:
    """Seed precedence: command-line flag, then scenario file, then $PURIFIER_SEED, then 0."""
    if flag_seed is not None:
        return flag_seed
    if file_seed is not None:
        return file_seed
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env, 0)
        except ValueError:
            raise ScenarioError(f"{SEED_ENV} is not an integer: {env!r}", source=SEED_ENV)
    return 0


def apply_overrides(raw: dict, overrides: dict[str, Any]) -> dict:
    """Return a copy of ``raw`` with CLI overrides layered on top."""
    out = copy.deepcopy(raw)
    if overrides.get("tick_rate") is not None:
        out["tick_rate"] = overrides["tick_rate"]
    if overrides.get("sigma_deg") is not None:
        out.setdefault("noise", {})["sigma_deg"] = overrides["sigma_deg"]
    if overrides.get("half_angle_deg") is not None:
        out.setdefault("flow_match", {})["half_angle_deg"] = overrides["half_angle_deg"]
    if overrides.get("theta_max_deg") is not None:
        out.setdefault("rawr_xd", {})["theta_max_deg"] = overrides["theta_max_deg"]
    out["seed"] = resolve_seed(out.get("seed"), overrides.get("seed"))
    return out


def parse_scenario(text: str, source: str = "<scenario>",
                   overrides: Optional[dict[str, Any]] = None) -> Scenario:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc.msg}", source, exc.lineno) from None
    lines = value_lines(text)

    errors = sorted(jsonschema.Draft202012Validator(SCHEMA).iter_errors(raw),
                    key=lambda e: (_line_for(lines, e.absolute_path) or 0, list(e.absolute_path)))
    if errors:
        err = errors[0]
        raise ScenarioError(err.message, source, _line_for(lines, err.absolute_path),
                            _path_str(err.absolute_path))

    ids = [o["id"] for o in raw["objects"]]
    seen: set[str] = set()
    for i, oid in enumerate(ids):
        if oid in seen:
            raise ScenarioError(f"duplicate object id {oid!r}", source,
                                _line_for(lines, ("objects", i, "id")), f"objects[{i}].id")
        seen.add(oid)
    for li, leg in enumerate(raw["route"]):
        for oi, oid in enumerate(leg.get("objectives", [])):
            if oid not in seen:
                path = ("route", li, "objectives", oi)
                raise ScenarioError(f"unknown object id {oid!r}", source,
                                    _line_for(lines, path), _path_str(path))
    for role, frames in raw.get("traces", {}).items():
        for ki, kf in enumerate(frames):
            if kf["leg"] >= len(raw["route"]):
                path = ("traces", role, ki, "leg")
                raise ScenarioError(f"leg {kf['leg']} does not exist", source,
                                    _line_for(lines, path), _path_str(path))
    rx = raw.get("rawr_xd", {})
    if rx.get("t_min", 0.25) >= rx.get("t_max", 200.0):
        raise ScenarioError("t_min must be below t_max", source,
                            _line_for(lines, ("rawr_xd",)), "rawr_xd")

    effective = apply_overrides(raw, overrides or {})
    return _build(effective)


def _build(raw: dict) -> Scenario:
    fm, rx = raw.get("flow_match", {}), raw.get("rawr_xd", {})
    rover, bin_ = raw.get("rover", {}), raw.get("bin", {})
    objects = [
        SceneObject(
            id=o["id"], kind=o["kind"], position=Vector3.of(o["position"]),
            bounding_radius=float(o["radius"]),
            orientation=UnitQuaternion.of(o["orientation"]) if "orientation" in o
            else UnitQuaternion.identity(),
        )
        for o in raw["objects"]
    ]
    route = [
        RouteLeg(Vector3.of(leg["waypoint"]),
                 float(leg.get("shield_open_duration", DEFAULT_SHIELD_OPEN_DURATION)),
                 tuple(leg.get("objectives", ())))
        for leg in raw["route"]
    ]
    return Scenario(
        raw=raw,
        name=raw.get("name", "scenario"),
        seed=int(raw["seed"]),
        tick_rate=float(raw.get("tick_rate", DEFAULT_TICK_RATE)),
        max_ticks=int(raw.get("max_ticks", DEFAULT_MAX_TICKS)),
        digest_interval=int(raw.get("digest_interval", 30)),
        rover_start=Vector3.of(rover.get("start", (0, 0, 0))),
        travel_speed=float(rover.get("travel_speed", DEFAULT_TRAVEL_SPEED)),
        bin_position=Vector3.of(bin_.get("position", (0.0, 1.0, 0.6))),
        capture_radius=float(bin_.get("capture_radius", DEFAULT_CAPTURE_RADIUS)),
        feed_radius=float(raw.get("feed_radius", DEFAULT_FEED_RADIUS)),
        objects=objects,
        route=route,
        flow_match=FlowMatchConfig(
            half_angle=math.radians(fm.get("half_angle_deg", 10.0)),
            torso_offset=float(fm.get("torso_offset", 0.25)),
            max_range=float(fm.get("max_range", 200.0)),
        ),
        rawr_xd=RawrXdConfig(
            theta_max=math.radians(rx.get("theta_max_deg", 60.0)),
            base_speed=float(rx.get("base_speed", 2.0)),
            t_min=float(rx.get("t_min", 0.25)),
            t_max=float(rx.get("t_max", 200.0)),
            mirror=bool(rx.get("mirror", False)),
            max_range=float(rx.get("max_range", 200.0)),
        ),
        sigma=math.radians(raw.get("noise", {}).get("sigma_deg", 0.0)),
        traces={k: list(v) for k, v in raw.get("traces", {}).items()},
        benchmarks=list(raw.get("benchmarks", [])),
    )


def load_scenario(path: str | os.PathLike, overrides: Optional[dict[str, Any]] = None) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc.strerror}", str(path)) from None
    return parse_scenario(text, str(path), overrides)
