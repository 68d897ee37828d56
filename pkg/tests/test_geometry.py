import math

import pytest
from hypothesis import given, strategies as st

from purifier.geometry import (FORWARD, RIGHT, UP, Cone, Pose, Ray, UnitQuaternion, Vector3,
                               angle_between, angle_to_axis, roll_about_forward, wrap_angle)

finite = st.floats(-100, 100, allow_nan=False, allow_infinity=False)
vectors = st.builds(Vector3, finite, finite, finite).filter(lambda v: v.length() > 1e-3)
angles = st.floats(-math.pi + 1e-6, math.pi - 1e-6)


@st.composite
def unit_quaternions(draw):
    axis = draw(vectors)
    return UnitQuaternion.from_axis_angle(axis, draw(st.floats(-math.pi, math.pi)))


Z_CONE = Cone(Vector3(0, 0, 0), Vector3(0, 0, 1), math.radians(5))


def test_angle_to_axis_on_axis():
    assert angle_to_axis(Z_CONE, Vector3(0, 0, 5)) == 0.0


def test_angle_to_axis_perpendicular():
    assert angle_to_axis(Z_CONE, Vector3(1, 0, 0)) == pytest.approx(math.pi / 2, abs=1e-15)


def test_angle_to_axis_oblique():
    # hand trigonometry: tan(angle) = 1 / 5
    assert angle_to_axis(Z_CONE, Vector3(1, 0, 5)) == pytest.approx(math.atan(1 / 5), abs=1e-12)
    assert angle_to_axis(Z_CONE, Vector3(1, 0, 5)) == pytest.approx(0.19740, abs=5e-6)


def test_angle_to_axis_rejects_apex():
    with pytest.raises(ValueError, match="coincident with apex"):
        angle_to_axis(Z_CONE, Vector3(0, 0, 1e-13))


def test_vector_rejects_non_finite():
    with pytest.raises(ValueError):
        Vector3(math.nan, 0, 0)
    with pytest.raises(ValueError):
        Vector3(0, math.inf, 0)


def test_cone_half_angle_bounds():
    with pytest.raises(ValueError):
        Cone(Vector3.zero(), FORWARD, 0.0)
    with pytest.raises(ValueError):
        Cone(Vector3.zero(), FORWARD, math.pi / 2)


def test_ray_requires_unit_direction():
    with pytest.raises(ValueError):
        Ray(Vector3.zero(), Vector3(0, 0, 2))


def test_controller_forward_is_minus_z():
    assert UnitQuaternion.identity().forward() == FORWARD


def test_roll_identity():
    q = UnitQuaternion.from_axis_angle(Vector3(1, 2, 3), 0.7)
    assert roll_about_forward(q, q) == 0.0


def test_roll_quarter_turn_right():
    q = UnitQuaternion.from_axis_angle(FORWARD, math.pi / 2)
    assert roll_about_forward(q, UnitQuaternion.identity()) == pytest.approx(math.pi / 2, abs=1e-12)
    # the controller's up vector now points to its right: a rightward tilt
    r = q.rotate(UP)
    assert r.x == pytest.approx(1.0) and abs(r.y) < 1e-12


def test_roll_thirty_left():
    q = UnitQuaternion.from_axis_angle(FORWARD, -math.pi / 6)
    assert roll_about_forward(q, UnitQuaternion.identity()) == pytest.approx(-math.pi / 6, abs=1e-12)


def test_roll_ignores_swing():
    # pitching the controller up does not read as a tilt
    pitch = UnitQuaternion.from_axis_angle(RIGHT, 0.6)
    tilt = UnitQuaternion.from_axis_angle(FORWARD, 0.4)
    assert roll_about_forward(pitch * tilt, pitch) == pytest.approx(0.4, abs=1e-12)
    assert roll_about_forward(pitch, UnitQuaternion.identity()) == pytest.approx(0.0, abs=1e-15)


def test_look_rotation_points_forward():
    target = Vector3(3, -1, 2)
    q = UnitQuaternion.look_rotation(target)
    f = q.forward()
    assert (f - target.normalized()).length() < 1e-12
    assert abs(q.norm() - 1) < 1e-12
    # up stays in the vertical plane through forward: right vector is horizontal
    assert abs(q.rotate(RIGHT).y) < 1e-12


def test_look_rotation_straight_up():
    q = UnitQuaternion.look_rotation(UP)
    assert (q.forward() - UP).length() < 1e-12


def test_wrap_angle_range():
    assert wrap_angle(math.pi) == math.pi
    assert wrap_angle(-math.pi) == math.pi
    assert wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)


@given(vectors, vectors)
def test_angle_dot_form_matches_atan2_form(a, b):
    c = a.dot(b) / (a.length() * b.length())
    via_dot = math.acos(max(-1.0, min(1.0, c)))
    # acos loses precision near 0 and pi; compare in cosine space there
    if 1e-4 < via_dot < math.pi - 1e-4:
        assert angle_between(a, b) == pytest.approx(via_dot, abs=1e-9)
    else:
        assert math.cos(angle_between(a, b)) == pytest.approx(c, abs=1e-9)


@given(unit_quaternions())
def test_roll_self_is_zero(q):
    assert roll_about_forward(q, q) == 0.0


@given(angles, unit_quaternions())
def test_roll_is_odd(theta, reference):
    plus = reference * UnitQuaternion.from_axis_angle(FORWARD, theta)
    minus = reference * UnitQuaternion.from_axis_angle(FORWARD, -theta)
    a, b = roll_about_forward(plus, reference), roll_about_forward(minus, reference)
    assert a + b == pytest.approx(0.0, abs=1e-9)
    assert a == pytest.approx(theta, abs=1e-9)


@given(unit_quaternions(), vectors)
def test_rotation_preserves_length(q, v):
    assert q.rotate(v).length() == pytest.approx(v.length(), rel=1e-12, abs=1e-9)


@given(unit_quaternions())
def test_normalized_has_unit_norm(q):
    scaled = UnitQuaternion(q.w * 3.7, q.x * 3.7, q.y * 3.7, q.z * 3.7)
    assert abs(scaled.normalized().norm() - 1.0) <= 1e-9


def test_pose_translation():
    p = Pose(Vector3(1, 2, 3)).translated(Vector3(1, 1, 1))
    assert p.position == Vector3(2, 3, 4)


def test_ray_distance_to_line():
    ray = Ray(Vector3.zero(), FORWARD)
    assert ray.distance_to_line(Vector3(3, 4, -10)) == pytest.approx(5.0)
