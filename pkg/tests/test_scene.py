import dataclasses

import pytest
from hypothesis import given, settings, strategies as st

from purifier.geometry import Vector3
from purifier.scene import (Completed, ObjectKind, ObjectStatus, RouteLeg, RoverState, RunSummary,
                            Scene, SceneObject, Stopped, Traveling, rover_step, start_rover,
                            try_collect, try_medicate)


def make_scene(legs=2, duration=60.0):
    objects = [
        SceneObject("t0", ObjectKind.TRASH, Vector3(0, 0, 0), 0.3),
        SceneObject("t1", ObjectKind.TRASH, Vector3(5, 0, 0), 0.3),
        SceneObject("w0", ObjectKind.WILDLIFE, Vector3(0, 0, 3), 0.5),
        SceneObject("m0", ObjectKind.MEDICATION, Vector3(0, 0, 3.5), 0.2),
    ]
    route = [RouteLeg(Vector3(0, 0, -10.0 * (i + 1)), duration, ("t0",) if i == 0 else ("t1",))
             for i in range(legs)]
    return Scene(objects, route)


def stopped(leg, remaining, position=Vector3(0, 0, -10)):
    return RoverState(Stopped(leg, remaining), position)


def test_object_radius_must_be_positive():
    with pytest.raises(ValueError):
        SceneObject("x", ObjectKind.TRASH, Vector3.zero(), 0.0)


def test_route_rejects_unknown_objective():
    with pytest.raises(ValueError, match="nope"):
        Scene([], [RouteLeg(Vector3.zero(), 1.0, ("nope",))])


def test_status_transitions_are_one_way():
    obj = SceneObject("w", ObjectKind.WILDLIFE, Vector3.zero(), 1.0)
    obj.resolve()
    assert obj.status is ObjectStatus.HEALED
    with pytest.raises(ValueError):
        obj.resolve()


def test_timer_expiry_moves_on():
    scene = make_scene()
    state = rover_step(stopped(0, 0.5), scene, 0.6)
    assert state.phase == Traveling(1)
    assert "t0" in scene.forfeited
    assert state.summary.stops_fully_cleared == 0


def test_objectives_resolved_leaves_immediately():
    scene = make_scene()
    assert try_collect(scene, "t0", Vector3(0, 0, 0), 0.75)
    state = rover_step(stopped(0, 30.0), scene, 1 / 90)
    assert state.phase == Traveling(1)
    assert state.summary.stops_fully_cleared == 1


def test_completion_event_counts_as_resolved():
    scene = make_scene()
    state = rover_step(stopped(0, 30.0), scene, 1 / 90, completions={"t0"})
    assert state.phase == Traveling(1)


def test_last_leg_timer_completes_and_freezes_summary():
    scene = make_scene(legs=1)
    done = rover_step(stopped(0, 0.01), scene, 0.1)
    assert done.phase == Completed()
    # further steps are no-ops, summary frozen even if the scene changes
    scene.objects["t1"].position = Vector3(0, 0, 0)
    assert try_collect(scene, "t1", Vector3.zero(), 1.0)
    assert rover_step(done, scene, 0.1) is done
    assert done.summary.trash_collected == 0


def test_stopped_decrements_timer():
    state = rover_step(stopped(0, 2.0), make_scene(), 0.5)
    assert state.phase == Stopped(0, 1.5)


def test_traveling_advances_and_snaps():
    scene = make_scene()
    state = start_rover(scene, Vector3.zero(), travel_speed=5.0)
    state = rover_step(state, scene, 1.0)
    assert state.phase == Traveling(0)
    assert state.position == Vector3(0, 0, -5.0)
    state = rover_step(state, scene, 1.0)  # remaining 5 <= 5 * 1: arrive and snap
    assert state.phase == Stopped(0, 60.0)
    assert state.position == Vector3(0, 0, -10.0)


def test_empty_objectives_wait_for_timer():
    scene = Scene([], [RouteLeg(Vector3.zero(), 1.0)])
    state = rover_step(stopped(0, 1.0, Vector3.zero()), scene, 0.5)
    assert state.phase == Stopped(0, 0.5)
    state = rover_step(state, scene, 0.5)
    assert state.phase == Completed()
    assert state.summary.stops_fully_cleared == 0


def test_non_positive_dt():
    with pytest.raises(ValueError, match="non-positive timestep"):
        rover_step(stopped(0, 1.0), make_scene(), 0.0)


def test_try_collect_coincident():
    scene = make_scene()
    assert try_collect(scene, "t0", Vector3(0, 0, 0), 0.75) is True
    assert scene["t0"].status is ObjectStatus.COLLECTED
    assert scene.trash_collected == 1


def test_try_collect_just_outside():
    scene = make_scene()
    assert try_collect(scene, "t0", Vector3(0.75 + 1e-6, 0, 0), 0.75) is False
    assert scene["t0"].active and scene.trash_collected == 0


def test_try_collect_boundary_is_inside():
    scene = make_scene()
    assert try_collect(scene, "t0", Vector3(0.75, 0, 0), 0.75) is True


def test_try_collect_twice_is_noop():
    scene = make_scene()
    assert try_collect(scene, "t0", Vector3.zero(), 0.75)
    assert try_collect(scene, "t0", Vector3.zero(), 0.75) is False
    assert scene.trash_collected == 1


def test_try_collect_wrong_kind():
    with pytest.raises(ValueError, match="not collectible"):
        try_collect(make_scene(), "w0", Vector3.zero(), 0.75)


def test_try_medicate_pair():
    scene = make_scene()
    scene["m0"].position = scene["w0"].position
    assert try_medicate(scene, "m0", "w0", 1.0) is True
    assert scene["m0"].status is ObjectStatus.CONSUMED
    assert scene["w0"].status is ObjectStatus.HEALED
    assert scene.wildlife_healed == 1


def test_try_medicate_healed_animal():
    scene = make_scene()
    scene["w0"].resolve()
    assert try_medicate(scene, "m0", "w0", 1.0) is False
    assert scene["m0"].active


def test_try_medicate_exactly_at_radius():
    scene = make_scene()
    # m0 sits 0.5 m from w0; closed ball includes the boundary
    assert scene["m0"].position.distance_to(scene["w0"].position) == 0.5
    assert try_medicate(scene, "m0", "w0", 0.5) is True


def test_try_medicate_invalid_pairing():
    with pytest.raises(ValueError, match="invalid pairing"):
        try_medicate(make_scene(), "w0", "m0", 1.0)


events = st.lists(st.tuples(st.sampled_from(["step", "collect0", "collect1", "medicate"]),
                            st.floats(0.01, 2.0)), max_size=80)


@settings(max_examples=60, deadline=None)
@given(events)
def test_counters_monotone_and_trash_conserved(ops):
    scene = make_scene(duration=3.0)
    state = start_rover(scene, Vector3(0, 0, -9.0), travel_speed=20.0)
    last = RunSummary()
    legs_seen = []
    for op, dt in ops:
        if op == "step":
            state = rover_step(state, scene, dt)
        elif op == "collect0":
            try_collect(scene, "t0", scene["t0"].position, 0.75)
        elif op == "collect1":
            try_collect(scene, "t1", scene["t1"].position, 0.75)
        else:
            try_medicate(scene, "m0", "w0", 1.0)
        assert scene.trash_collected >= last.trash_collected
        assert scene.wildlife_healed >= last.wildlife_healed
        assert state.summary.trash_collected <= scene.initial_trash
        assert scene.trash_collected + scene.count(ObjectKind.TRASH, ObjectStatus.ACTIVE) \
            == scene.initial_trash
        if isinstance(state.phase, Stopped):
            assert state.phase.remaining_time >= 0.0
        if not isinstance(state.phase, Completed):
            legs_seen.append(state.phase.leg_index)
        last = dataclasses.replace(last, trash_collected=scene.trash_collected,
                                   wildlife_healed=scene.wildlife_healed)
    assert legs_seen == sorted(legs_seen)


def test_rover_step_deterministic():
    a, b = make_scene(), make_scene()
    sa = sb = start_rover(a, Vector3.zero(), 3.0)
    for _ in range(500):
        sa, sb = rover_step(sa, a, 1 / 90), rover_step(sb, b, 1 / 90)
        assert sa == sb
