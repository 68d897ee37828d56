"""Fixed-timestep simulation of a two-player session, plus benchmarks.

One tick of :class:`World` applies both players' inputs, ticks FLOW-MATCH
(collector) and RAWR-XD (medic), resolves drops into the bin and feedings,
steps the rover, then captures metrics. Given the same scenario the whole
run is bit-for-bit reproducible, which is what lets two sync peers agree.
"""
from __future__ import annotations

import csv
import io
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Union

from .geometry import FORWARD, Cone, Pose, Ray, UnitQuaternion, Vector3, roll_about_forward
from .homer import FlowMatchState, TechniqueEvent, flow_match_tick, release_grab
from .reel import (BASE_SPEED, T_MAX, T_MIN, THETA_MAX, RawrXdState, ReelState, WristModulation,
                   rawr_xd_tick, release_reel, reel_tick)
from .rng import AimNoise
from .scenario import Scenario
from .scene import (ObjectKind, Scene, SceneObject, Stopped, Traveling, start_rover,
                    rover_step, try_collect, try_medicate)
from .selection import flashlight_select, ray_select
from .sync import InputFrame, Role, SimStep, StateDigest, canonical_json
from .trace import ScriptedPlayer

POINT_RADIUS = 1e-9
REEL_GOAL_TOLERANCE = 1e-6


def _num(x: float) -> Optional[float]:
    return x if math.isfinite(x) else None


def _vec(v: Vector3) -> list[float]:
    return v.as_list()


class World:
    """Deterministic simulation state for one run."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.dt = scenario.dt
        self.scene = Scene(scenario.build_objects(), scenario.route)
        self.rover = start_rover(self.scene, scenario.rover_start, scenario.travel_speed)
        self.collector = FlowMatchState(config=scenario.flow_match)
        self.medic = RawrXdState(config=scenario.rawr_xd)
        self.noise = AimNoise(scenario.sigma, scenario.seed)
        self.tick = 0
        self.arrival_tick: Optional[int] = None
        self.stops: list[dict] = []
        self.attempts: list[dict] = []
        self.ticks_to_select: list[dict] = []
        self.ticks_to_deliver: list[dict] = []
        self.reel_series: list[dict] = []
        self.digests: list[StateDigest] = []
        self._grab_tick: dict[str, int] = {}

    # -- views for scripted players ---------------------------------------
    def stop_context(self) -> tuple[Optional[int], Optional[int]]:
        """(leg index, ticks since arrival) while the shield is open, else (None, None)."""
        phase = self.rover.phase
        if isinstance(phase, Stopped):
            return phase.leg_index, self.tick - self.arrival_tick
        return None, None

    @property
    def completed(self) -> bool:
        return self.rover.completed

    # -- simulation -------------------------------------------------------
    def step(self, step: SimStep) -> None:
        if step.tick != self.tick:
            raise ValueError(f"world at tick {self.tick} given step for tick {step.tick}")
        for role, frame in step.inputs.items():
            if frame.role is not Role(role):
                raise ValueError(f"role violation: {frame.role.value} input in {role} slot")
            if frame.tick != step.tick:
                raise ValueError("input frame tick does not match step")
        if self.completed:
            return
        collector_in, medic_in = step.inputs[Role.COLLECTOR], step.inputs[Role.MEDIC]
        completions: set[str] = set()

        if self.rover.shield_open:
            origin = self.rover.position
            self._tick_collector(collector_in, origin, completions)
            self._tick_medic(medic_in, origin, completions)
        else:
            # shield closed: inputs are ignored, but button edges still track
            self.collector.trigger_down = collector_in.trigger
            self.medic.trigger_down = medic_in.trigger

        before = self.rover
        self.rover = rover_step(self.rover, self.scene, self.dt, completions)
        self._track_phase(before)
        if (self.tick + 1) % self.scenario.digest_interval == 0:
            self.digests.append(self.digest())
        self.tick += 1

    def _to_world(self, pose: Pose, origin: Vector3) -> Pose:
        return pose.translated(origin)

    def _record_attempt(self, role: Role, attempt) -> None:
        r = attempt.result
        self.attempts.append({
            "tick": self.tick,
            "role": role.value,
            "technique": attempt.technique,
            "object_id": r.object_id,
            "score": _num(r.score),
            "candidates_considered": r.candidates_considered,
            "deviation_rad": attempt.deviation,
            "hit": r.hit,
        })

    def _on_selected(self, role: Role, object_id: str) -> None:
        self._grab_tick[object_id] = self.tick
        self.ticks_to_select.append({"role": role.value, "object_id": object_id,
                                     "ticks": self.tick - self.arrival_tick})

    def _on_delivered(self, role: Role, object_id: str) -> None:
        self.ticks_to_deliver.append({"role": role.value, "object_id": object_id,
                                      "ticks": self.tick - self._grab_tick[object_id]})

    def _tick_collector(self, frame: InputFrame, origin: Vector3, completions: set) -> None:
        state = self.collector
        flow_match_tick(state, self._to_world(frame.head, origin),
                        self._to_world(frame.primary_controller, origin),
                        frame.trigger, self.scene, self.noise)
        if state.last_attempt is not None:
            self._record_attempt(Role.COLLECTOR, state.last_attempt)
        for event, object_id in state.events:
            if event is TechniqueEvent.SELECTED:
                self._on_selected(Role.COLLECTOR, object_id)
            elif event is TechniqueEvent.RELEASED:
                bin_at = origin + self.scenario.bin_position
                if try_collect(self.scene, object_id, bin_at, self.scenario.capture_radius):
                    completions.add(object_id)
                    self._on_delivered(Role.COLLECTOR, object_id)

    def _tick_medic(self, frame: InputFrame, origin: Vector3, completions: set) -> None:
        state = self.medic
        rawr_xd_tick(state, self._to_world(frame.primary_controller, origin),
                     self._to_world(frame.secondary_controller, origin),
                     frame.trigger, frame.reel_input, self.scene, self.dt, self.noise)
        if state.last_attempt is not None:
            self._record_attempt(Role.MEDIC, state.last_attempt)
        if state.reel is not None and not state.events:
            m = state.modulation
            self.reel_series.append({"tick": self.tick, "object_id": state.reel.object_id,
                                     "t": state.reel.t, "multiplier": m.multiplier,
                                     "slider_value": m.slider_value})
        for event, object_id in state.events:
            if event is TechniqueEvent.SELECTED:
                self._on_selected(Role.MEDIC, object_id)
            elif event is TechniqueEvent.RELEASED:
                animal = self._nearest_wildlife(self.scene[object_id].position)
                if animal is not None and try_medicate(self.scene, object_id, animal.id,
                                                       self.scenario.feed_radius):
                    completions.update((object_id, animal.id))
                    self._on_delivered(Role.MEDIC, object_id)

    def _nearest_wildlife(self, point: Vector3) -> Optional[SceneObject]:
        best, best_d = None, math.inf
        for obj in self.scene.selectable():
            if obj.kind is ObjectKind.WILDLIFE:
                d = obj.position.distance_to(point)
                if d < best_d:
                    best, best_d = obj, d
        return best

    def _track_phase(self, before) -> None:
        prev, now = before.phase, self.rover.phase
        if isinstance(prev, Traveling) and isinstance(now, Stopped):
            self.arrival_tick = self.tick + 1
            self.stops.append({"leg": now.leg_index, "arrival_tick": self.arrival_tick})
        elif isinstance(prev, Stopped) and not isinstance(now, Stopped):
            cleared = (self.rover.summary.stops_fully_cleared
                       > before.summary.stops_fully_cleared)
            self.stops[-1].update(departure_tick=self.tick,
                                  reason="objectives_complete" if cleared else "timer_expired")
            # shield closing ends any manipulation in progress
            self.collector.events, self.medic.events = [], []
            release_grab(self.collector, self.scene)
            release_reel(self.medic, self.scene)
            self.arrival_tick = None

    # -- state hashing ----------------------------------------------------
    def canonical_state(self) -> dict:
        phase = self.rover.phase
        if isinstance(phase, Traveling):
            phase_doc = {"kind": "traveling", "leg": phase.leg_index}
        elif isinstance(phase, Stopped):
            phase_doc = {"kind": "stopped", "leg": phase.leg_index,
                         "remaining_time": phase.remaining_time}
        else:
            phase_doc = {"kind": "completed"}
        grab = self.collector.grab
        reel = self.medic.reel
        return {
            "tick": self.tick,
            "rover": {"phase": phase_doc, "position": _vec(self.rover.position),
                      "summary": vars(self.rover.summary)},
            "objects": [
                {"id": o.id, "status": o.status.value, "position": _vec(o.position),
                 "orientation": o.orientation.as_list()}
                for o in self.scene.objects.values()
            ],
            "forfeited": sorted(self.scene.forfeited),
            "collector": None if grab is None else {
                "object_id": grab.object_id, "scale": grab.scale, "offset": _vec(grab.offset)},
            "medic": None if reel is None else {
                "object_id": reel.object_id, "t": reel.t,
                "multiplier": self.medic.modulation.multiplier},
            "rng_state": self.noise.rng.state,
        }

    def state_bytes(self) -> bytes:
        return canonical_json(self.canonical_state()).encode("utf-8")

    def digest(self) -> StateDigest:
        return StateDigest.of(self.tick, self.state_bytes())

    def inject_bitflip(self) -> None:
        """Flip the lowest mantissa bit of the first object's x coordinate."""
        obj = next(iter(self.scene.objects.values()))
        bits = struct.unpack("<Q", struct.pack("<d", obj.position.x))[0] ^ 1
        x = struct.unpack("<d", struct.pack("<Q", bits))[0]
        obj.position = Vector3(x, obj.position.y, obj.position.z)


# -- benchmarks -----------------------------------------------------------

def rayleigh_hit_rate(threshold: float, sigma: float) -> float:
    """P(deviation <= threshold) for an isotropic 2-D Gaussian aim error."""
    if sigma == 0.0:
        return 1.0
    return 1.0 - math.exp(-(threshold * threshold) / (2.0 * sigma * sigma))


def selection_trials(distance: float, target_radius: float, sigma: float, attempts: int,
                     technique: str, cone_half_angle: float = math.radians(5.0), seed: int = 0,
                     ) -> list[tuple[float, bool]]:
    """Per-attempt ``(deviation, hit)`` against one target straight ahead at ``distance``."""
    if attempts < 1:
        raise ValueError("attempts must be >= 1")
    if technique not in ("ray", "flashlight"):
        raise ValueError(f"unknown selection technique {technique!r}")
    radius = target_radius if target_radius > 0.0 else POINT_RADIUS
    target = SceneObject("target", ObjectKind.TRASH, FORWARD * distance, radius)
    scene = Scene([target])
    noise = AimNoise(sigma, seed)
    reach = distance + radius + 1.0
    rest = UnitQuaternion.identity()
    origin = Vector3.zero()
    out = []
    for _ in range(attempts):
        aim, deviation = noise.perturb(rest)
        direction = aim.forward().normalized()
        if technique == "ray":
            result = ray_select(Ray(origin, direction), scene, max_range=reach)
        else:
            result = flashlight_select(Cone(origin, direction, cone_half_angle), scene,
                                       max_range=reach)
        out.append((deviation, result.hit))
    return out


def selection_benchmark(distance: float, target_radius: float, sigma: float, attempts: int,
                        technique: str, cone_half_angle: float = math.radians(5.0),
                        seed: int = 0) -> float:
    trials = selection_trials(distance, target_radius, sigma, attempts, technique,
                              cone_half_angle, seed)
    return sum(hit for _, hit in trials) / len(trials)


TiltProfile = Union[float, Callable[[int], float]]


def reel_benchmark(start_t: float, goal_t: float, technique: str = "fishing-reel",
                   tilt_profile: TiltProfile = 0.0, base_speed: float = BASE_SPEED,
                   dt: float = 1.0 / 90.0, theta_max: float = THETA_MAX,
                   t_min: float = T_MIN, t_max: float = T_MAX,
                   max_ticks: int = 10_000_000) -> int:
    """Ticks of full-deflection reeling needed to move from ``start_t`` to ``goal_t``.

    RAWR-XD reads its multiplier from a wrist orientation built from the
    tilt profile (radians, right positive) and run through roll extraction.
    """
    if technique not in ("fishing-reel", "rawr-xd"):
        raise ValueError(f"unknown reel technique {technique!r}")
    for name, value in (("start", start_t), ("goal", goal_t)):
        if not t_min <= value <= t_max:
            raise ValueError(f"{name} depth {value} unreachable: outside [{t_min}, {t_max}]")
    if abs(goal_t - start_t) <= REEL_GOAL_TOLERANCE:
        return 0
    direction = 1.0 if goal_t > start_t else -1.0
    lo, hi = min(start_t, goal_t), max(start_t, goal_t)
    state = ReelState("bench", Ray(Vector3.zero(), FORWARD), start_t, base_speed, lo, hi)
    reference = UnitQuaternion.identity()
    profile = tilt_profile if callable(tilt_profile) else (lambda _tick: tilt_profile)
    ticks = 0
    while abs(state.t - goal_t) > REEL_GOAL_TOLERANCE:
        if ticks >= max_ticks:
            raise ValueError("goal unreachable within tick budget")
        if technique == "rawr-xd":
            wrist = UnitQuaternion.from_axis_angle(FORWARD, profile(ticks))
            modulation = WristModulation.from_roll(roll_about_forward(wrist, reference), theta_max)
        else:
            modulation = WristModulation.neutral()
        state = reel_tick(state, direction, modulation, dt)
        ticks += 1
    return ticks


def run_benchmark(spec: dict, seed: int) -> tuple[dict, list[tuple[str, float, bool]]]:
    """Run one scenario-embedded benchmark; return its result and attempt rows."""
    if spec["kind"] == "select":
        technique = spec.get("technique", "flashlight")
        sigma = math.radians(spec.get("sigma_deg", 2.0))
        half = math.radians(spec.get("half_angle_deg", 5.0))
        distance = spec.get("distance", 50.0)
        radius = spec.get("target_radius", 0.0)
        trials = selection_trials(distance, radius, sigma, spec.get("attempts", 1000),
                                  technique, half, seed)
        rate = sum(h for _, h in trials) / len(trials)
        threshold = (math.asin(min(1.0, radius / distance)) if radius > 0 else 0.0)
        if technique == "flashlight":
            threshold += half
        result = {"kind": "select", "technique": technique, "attempts": len(trials),
                  "rate": rate, "rayleigh_rate": rayleigh_hit_rate(threshold, sigma)}
        return result, [(technique, d, h) for d, h in trials]
    technique = spec.get("technique", "rawr-xd")
    start = spec.get("start", 1.0)
    distance = spec.get("distance", 10.0)
    ticks = reel_benchmark(start, start + distance, technique,
                           math.radians(spec.get("tilt_deg", 0.0)), spec.get("base_speed", 2.0))
    return {"kind": "reel", "technique": technique, "ticks": ticks}, []


# -- whole runs -----------------------------------------------------------

@dataclass
class RunMetrics:
    metrics: dict
    attempt_rows: list[tuple[str, float, bool]] = field(default_factory=list)

    @property
    def summary(self) -> dict:
        return self.metrics["summary"]

    def metrics_json(self) -> str:
        return json.dumps(self.metrics, sort_keys=True, indent=2, allow_nan=False) + "\n"

    def attempts_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["attempt", "technique", "deviation_rad", "hit"])
        for i, (technique, deviation, hit) in enumerate(self.attempt_rows):
            writer.writerow([i, technique, repr(deviation), int(hit)])
        return buf.getvalue()

    def summary_txt(self) -> str:
        s = self.metrics["summary"]
        lines = [
            f"Route complete: {self.metrics['scenario']}" if self.metrics["completed"]
            else f"Run stopped before the end of the route: {self.metrics['scenario']}",
            f"  hazardous waste collected : {s['trash_collected']}",
            f"  wildlife healed           : {s['wildlife_healed']}",
            f"  stops fully cleared       : {s['stops_fully_cleared']} of {len(self.metrics['stops'])}",
            f"  simulated ticks           : {s['total_ticks']}",
        ]
        for stop in self.metrics["stops"]:
            lines.append(f"  stop {stop['leg']}: ticks {stop['arrival_tick']}-"
                         f"{stop.get('departure_tick', '?')} ({stop.get('reason', 'open')})")
        return "\n".join(lines) + "\n"

    def write(self, out_dir: str | Path) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.json").write_text(self.metrics_json(), encoding="utf-8")
        (out / "attempts.csv").write_text(self.attempts_csv(), encoding="utf-8")
        (out / "summary.txt").write_text(self.summary_txt(), encoding="utf-8")


def _rate(attempts: list[dict], technique: str) -> Optional[float]:
    mine = [a for a in attempts if a["technique"] == technique]
    if not mine:
        return None
    return sum(a["hit"] for a in mine) / len(mine)


def collect_metrics(world: World) -> RunMetrics:
    scenario = world.scenario
    rows: list[tuple[str, float, bool]] = [
        (a["technique"], a["deviation_rad"], a["hit"]) for a in world.attempts
    ]
    bench_results = []
    for spec in scenario.benchmarks:
        result, bench_rows = run_benchmark(spec, scenario.seed)
        bench_results.append(result)
        rows.extend(bench_rows)
    final = world.digest()
    metrics = {
        "scenario": scenario.name,
        "scenario_id": scenario.scenario_id,
        "seed": scenario.seed,
        "tick_rate": scenario.tick_rate,
        "completed": world.completed,
        "ticks": world.tick,
        "summary": vars(world.rover.summary).copy(),
        "stops": world.stops,
        "attempts": world.attempts,
        "success_rates": {"flow_match": _rate(world.attempts, "flow_match"),
                          "rawr_xd": _rate(world.attempts, "rawr_xd")},
        "ticks_to_select": world.ticks_to_select,
        "ticks_to_deliver": world.ticks_to_deliver,
        "reel_series": world.reel_series,
        "digests": [{"tick": d.tick, "hash": d.hex} for d in world.digests],
        "final_digest": {"tick": final.tick, "hash": final.hex},
        "benchmarks": bench_results,
    }
    return RunMetrics(metrics, rows)


def players_for(scenario: Scenario) -> dict[Role, ScriptedPlayer]:
    return {role: ScriptedPlayer(role, scenario.traces.get(role.value, []))
            for role in (Role.COLLECTOR, Role.MEDIC)}


def run_scenario(scenario: Scenario) -> RunMetrics:
    """Run both scripted players locally until the route completes."""
    world = World(scenario)
    players = players_for(scenario)
    while not world.completed and world.tick < scenario.max_ticks:
        leg, since = world.stop_context()
        inputs = {role: p.frame(world.tick, leg, since) for role, p in players.items()}
        world.step(SimStep(world.tick, inputs))
    return collect_metrics(world)


def run_coop(scenario: Scenario, session, inject_bitflip_at: Optional[int] = None) -> RunMetrics:
    """Run this peer's half of a lockstep session; the peer runs the other role.

    ``inject_bitflip_at`` corrupts local state after that tick (fault testing).
    """
    world = World(scenario)
    player = players_for(scenario)[session.role]
    submitted = 0
    while not world.completed and world.tick < scenario.max_ticks:
        leg, since = world.stop_context()
        world.step(session.step(player.frame(world.tick, leg, since)))
        if inject_bitflip_at is not None and world.tick - 1 == inject_bitflip_at:
            world.inject_bitflip()
        while submitted < len(world.digests):
            session.submit_digest(world.digests[submitted])
            submitted += 1
    session.finish(world.digest())
    return collect_metrics(world)
