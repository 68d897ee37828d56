"""Regenerate the bundled golden scenarios under src/purifier/golden/.

The scripted traces need controller positions that land a HOMER-grabbed
object in the bin and reel counts that carry medication to an animal; this
script works those out so the JSON stays hand-readable.

    python scripts/make_golden.py && purifier verify --update
"""
from __future__ import annotations

import json
import math
from pathlib import Path

from purifier.geometry import Vector3

OUT = Path(__file__).resolve().parents[1] / "src" / "purifier" / "golden"
TICK_RATE = 90
HEAD = Vector3(0.0, 1.7, 0.0)
TORSO = HEAD - Vector3(0.0, 0.25, 0.0)
PRIMARY = Vector3(0.25, 1.4, -0.3)
BIN = Vector3(0.0, 1.0, 0.6)
BASE_SPEED = 2.0


def r6(v: Vector3) -> list[float]:
    return [round(c, 6) for c in v.as_list()]


def collector_script(leg: int, waypoint: Vector3, trash: Vector3, press_at: int,
                     carry_ticks: int = 30) -> list[dict]:
    """Aim at ``trash``, grab it, sweep the hand so HOMER drops it in the bin."""
    local = trash - waypoint
    start = Vector3.of(r6(PRIMARY))
    scale = (local - TORSO).length() / (start - TORSO).length()
    offset = local - (TORSO + (start - TORSO) * scale)
    drop = TORSO + (BIN - offset - TORSO) / scale
    aim = {"position": r6(start), "aim": r6(local)}
    return [
        {"leg": leg, "at": 0, "head": r6(HEAD), "primary": aim, "trigger": False},
        {"leg": leg, "at": press_at, "trigger": True},
        {"leg": leg, "at": press_at + carry_ticks, "lerp": True,
         "primary": {"position": r6(drop)}},
        {"leg": leg, "at": press_at + carry_ticks + 5, "trigger": False},
    ]


def medic_script(leg: int, waypoint: Vector3, medication: Vector3, med_radius: float,
                 animal: Vector3, press_at: int, tilt_deg: float) -> list[dict]:
    """Ray-select the medication, swing onto the animal, and reel to its depth."""
    med, target = medication - waypoint, animal - waypoint
    hit = (med - PRIMARY).length() - med_radius
    depth = (target - PRIMARY).length()
    multiplier = 1.0 + (tilt_deg / 60.0) * 4.0 if tilt_deg >= 0 else 1.0 + (tilt_deg / 60.0) * 0.5
    step = BASE_SPEED * multiplier / TICK_RATE
    direction = 1.0 if depth > hit else -1.0
    ticks = round(abs(depth - hit) / step)
    return [
        {"leg": leg, "at": 0, "head": r6(HEAD),
         "primary": {"position": r6(PRIMARY), "aim": r6(med)},
         "secondary": {"position": [-0.25, 1.4, -0.3], "roll_deg": 0.0}, "trigger": False},
        {"leg": leg, "at": press_at, "trigger": True},
        {"leg": leg, "at": press_at + 1, "primary": {"aim": r6(target)},
         "secondary": {"roll_deg": tilt_deg}, "reel": direction},
        {"leg": leg, "at": press_at + 1 + ticks, "reel": 0.0},
        {"leg": leg, "at": press_at + 2 + ticks, "trigger": False},
    ]


def three_stop() -> dict:
    w = [Vector3(0.0, 0.0, -10.0), Vector3(0.0, 0.0, -20.0), Vector3(0.0, 0.0, -30.0)]
    objects = {
        "trash-a": (Vector3(4.0, 0.3, -16.0), 0.3, "trash"),
        "wildlife-a": (Vector3(-5.0, 0.5, -17.0), 0.6, "wildlife"),
        "med-a": (Vector3(-1.5, 1.0, -13.0), 0.25, "medication"),
        "trash-b": (Vector3(6.0, 0.2, -24.0), 0.3, "trash"),
        "trash-c": (Vector3(-7.0, 0.2, -21.0), 0.3, "trash"),
        "wildlife-b": (Vector3(2.0, 0.5, -42.0), 0.6, "wildlife"),
        "med-b": (Vector3(0.8, 1.2, -33.0), 0.25, "medication"),
    }
    collector = (collector_script(0, w[0], objects["trash-a"][0], 20)
                 + collector_script(1, w[1], objects["trash-b"][0], 30))
    medic = (medic_script(0, w[0], objects["med-a"][0], 0.25, objects["wildlife-a"][0], 15, 0.0)
             + medic_script(2, w[2], objects["med-b"][0], 0.25, objects["wildlife-b"][0], 10, 60.0))
    return {
        "schema_version": 1,
        "name": "three-stop",
        "seed": 20771,
        "tick_rate": TICK_RATE,
        "rover": {"start": [0.0, 0.0, 0.0], "travel_speed": 5.0},
        "bin": {"position": r6(BIN), "capture_radius": 0.75},
        "feed_radius": 1.0,
        "objects": [{"id": k, "kind": kind, "position": r6(p), "radius": r}
                    for k, (p, r, kind) in objects.items()],
        "route": [
            {"waypoint": r6(w[0]), "shield_open_duration": 20.0,
             "objectives": ["trash-a", "wildlife-a"]},
            {"waypoint": r6(w[1]), "shield_open_duration": 4.0,
             "objectives": ["trash-b", "trash-c"]},
            {"waypoint": r6(w[2]), "shield_open_duration": 20.0, "objectives": ["wildlife-b"]},
        ],
        "flow_match": {"half_angle_deg": 10.0, "torso_offset": 0.25, "max_range": 200.0},
        "rawr_xd": {"theta_max_deg": 60.0, "base_speed": BASE_SPEED, "t_min": 0.25,
                    "t_max": 200.0, "mirror": False},
        "noise": {"sigma_deg": 0.1},
        "traces": {"collector": collector, "medic": medic},
        "benchmarks": [
            {"kind": "select", "technique": "ray", "distance": 50.0,
             "target_radius": round(50.0 * math.sin(math.radians(0.5)), 6),
             "sigma_deg": 2.0, "attempts": 2000},
            {"kind": "select", "technique": "flashlight", "distance": 50.0, "target_radius": 0.0,
             "sigma_deg": 2.0, "half_angle_deg": 5.0, "attempts": 2000},
            {"kind": "reel", "technique": "fishing-reel", "start": 1.0, "distance": 10.0},
            {"kind": "reel", "technique": "rawr-xd", "start": 1.0, "distance": 10.0,
             "tilt_deg": 60.0},
        ],
    }


def single_trash() -> dict:
    w = Vector3(0.0, 0.0, -5.0)
    trash = Vector3(1.0, 0.4, -8.0)
    return {
        "schema_version": 1,
        "name": "single-trash",
        "seed": 7,
        "tick_rate": TICK_RATE,
        "rover": {"start": [0.0, 0.0, 0.0]},
        "bin": {"position": r6(BIN), "capture_radius": 0.75},
        "objects": [{"id": "trash-1", "kind": "trash", "position": r6(trash), "radius": 0.3}],
        "route": [{"waypoint": r6(w), "shield_open_duration": 10.0, "objectives": ["trash-1"]}],
        "traces": {"collector": collector_script(0, w, trash, 5, carry_ticks=20)},
    }


def empty_one_leg() -> dict:
    return {
        "schema_version": 1,
        "name": "empty-one-leg",
        "seed": 1,
        "objects": [],
        "route": [{"waypoint": [0.0, 0.0, -5.0], "shield_open_duration": 2.0}],
    }


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for name, doc in (("three_stop", three_stop()), ("single_trash", single_trash()),
                      ("empty_one_leg", empty_one_leg())):
        (OUT / f"{name}.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        print(f"wrote {OUT / name}.json")


if __name__ == "__main__":
    main()
