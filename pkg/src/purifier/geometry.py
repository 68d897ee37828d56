"""Small, exact 3D math primitives shared by the interaction techniques.

Conventions
-----------

- Right-handed coordinates, +Y is up.
- A controller (or head) points along its local -Z axis; local +X is right.
- Quaternions are stored as ``(w, x, y, z)``.
- Everything is plain 64-bit Python floats. Operation order is fixed so the
  same inputs always produce the same bits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence


@dataclass(frozen=True, slots=True)
class Vector3:
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise ValueError(f"non-finite vector component: ({self.x}, {self.y}, {self.z})")

    def __add__(self, other: Vector3) -> Vector3:
        return Vector3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: Vector3) -> Vector3:
        return Vector3(self.x - other.x, self.y - other.y, self.z - other.z)

    def __mul__(self, scalar: float) -> Vector3:
        return Vector3(self.x * scalar, self.y * scalar, self.z * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> Vector3:
        return Vector3(-self.x, -self.y, -self.z)

    def __truediv__(self, scalar: float) -> Vector3:
        return Vector3(self.x / scalar, self.y / scalar, self.z / scalar)

    def dot(self, other: Vector3) -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def cross(self, other: Vector3) -> Vector3:
        return Vector3(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )

    def length(self) -> float:
        return math.sqrt(self.dot(self))

    def distance_to(self, other: Vector3) -> float:
        return (self - other).length()

    def normalized(self) -> Vector3:
        n = self.length()
        if n == 0.0:
            raise ValueError("cannot normalize a zero-length vector")
        return self / n

    def as_list(self) -> list[float]:
        return [self.x, self.y, self.z]

    @classmethod
    def of(cls, values: Iterable[float]) -> Vector3:
        x, y, z = values
        return cls(float(x), float(y), float(z))

    @classmethod
    def zero(cls) -> Vector3:
        return cls(0.0, 0.0, 0.0)


UP = Vector3(0.0, 1.0, 0.0)
RIGHT = Vector3(1.0, 0.0, 0.0)
FORWARD = Vector3(0.0, 0.0, -1.0)


@dataclass(frozen=True, slots=True)
class UnitQuaternion:
    """Rotation quaternion ``(w, x, y, z)``.

    The constructor does not renormalize; use :meth:`normalized` or one of
    the factory methods when building from raw numbers.
    """

    w: float
    x: float
    y: float
    z: float

    @classmethod
    def identity(cls) -> UnitQuaternion:
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_axis_angle(cls, axis: Vector3, angle: float) -> UnitQuaternion:
        a = axis.normalized()
        half = 0.5 * angle
        s = math.sin(half)
        return cls(math.cos(half), a.x * s, a.y * s, a.z * s)

    @classmethod
    def of(cls, values: Sequence[float]) -> UnitQuaternion:
        w, x, y, z = values
        return cls(float(w), float(x), float(y), float(z)).normalized()

    @classmethod
    def look_rotation(cls, forward: Vector3, up: Vector3 = UP) -> UnitQuaternion:
        """Orientation whose local -Z points along ``forward``, +Y toward ``up``."""
        f = forward.normalized()
        z_axis = -f
        x_axis = up.cross(z_axis)
        if x_axis.length() < 1e-12:
            # forward parallel to up; pick any perpendicular reference
            alt = Vector3(0.0, 0.0, 1.0) if abs(f.z) < 0.9 else Vector3(1.0, 0.0, 0.0)
            x_axis = alt.cross(z_axis)
        x_axis = x_axis.normalized()
        y_axis = z_axis.cross(x_axis)
        return cls._from_basis(x_axis, y_axis, z_axis)

    @classmethod
    def _from_basis(cls, xa: Vector3, ya: Vector3, za: Vector3) -> UnitQuaternion:
        # columns of the rotation matrix are the basis vectors
        m00, m01, m02 = xa.x, ya.x, za.x
        m10, m11, m12 = xa.y, ya.y, za.y
        m20, m21, m22 = xa.z, ya.z, za.z
        trace = m00 + m11 + m22
        if trace > 0.0:
            s = 2.0 * math.sqrt(trace + 1.0)
            q = cls(0.25 * s, (m21 - m12) / s, (m02 - m20) / s, (m10 - m01) / s)
        elif m00 > m11 and m00 > m22:
            s = 2.0 * math.sqrt(1.0 + m00 - m11 - m22)
            q = cls((m21 - m12) / s, 0.25 * s, (m01 + m10) / s, (m02 + m20) / s)
        elif m11 > m22:
            s = 2.0 * math.sqrt(1.0 + m11 - m00 - m22)
            q = cls((m02 - m20) / s, (m01 + m10) / s, 0.25 * s, (m12 + m21) / s)
        else:
            s = 2.0 * math.sqrt(1.0 + m22 - m00 - m11)
            q = cls((m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, 0.25 * s)
        return q.normalized()

    def norm(self) -> float:
        return math.sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)

    def normalized(self) -> UnitQuaternion:
        n = self.norm()
        if n == 0.0 or not math.isfinite(n):
            raise ValueError("cannot normalize a degenerate quaternion")
        return UnitQuaternion(self.w / n, self.x / n, self.y / n, self.z / n)

    def conjugate(self) -> UnitQuaternion:
        return UnitQuaternion(self.w, -self.x, -self.y, -self.z)

    inverse = conjugate

    def __mul__(self, other: UnitQuaternion) -> UnitQuaternion:
        aw, ax, ay, az = self.w, self.x, self.y, self.z
        bw, bx, by, bz = other.w, other.x, other.y, other.z
        # terms paired so that conjugate(q) * q cancels to an exact zero vector
        return UnitQuaternion(
            aw * bw - ax * bx - ay * by - az * bz,
            (aw * bx + ax * bw) + (ay * bz - az * by),
            (aw * by + ay * bw) + (az * bx - ax * bz),
            (aw * bz + az * bw) + (ax * by - ay * bx),
        )

    def rotate(self, v: Vector3) -> Vector3:
        # v' = v + 2w(u x v) + 2 u x (u x v)
        u = Vector3(self.x, self.y, self.z)
        t = u.cross(v) * 2.0
        return v + t * self.w + u.cross(t)

    def forward(self) -> Vector3:
        return self.rotate(FORWARD)

    def as_list(self) -> list[float]:
        return [self.w, self.x, self.y, self.z]


@dataclass(frozen=True, slots=True)
class Pose:
    position: Vector3
    orientation: UnitQuaternion = UnitQuaternion.identity()

    def forward(self) -> Vector3:
        return self.orientation.forward()

    def translated(self, offset: Vector3) -> Pose:
        return Pose(self.position + offset, self.orientation)


@dataclass(frozen=True, slots=True)
class Ray:
    origin: Vector3
    direction: Vector3

    def __post_init__(self) -> None:
        if abs(self.direction.length() - 1.0) > 1e-9:
            raise ValueError("ray direction must be unit length")

    @classmethod
    def from_pose(cls, pose: Pose) -> Ray:
        return cls(pose.position, pose.forward().normalized())

    def at(self, t: float) -> Vector3:
        return self.origin + self.direction * t

    def distance_to_line(self, point: Vector3) -> float:
        d = point - self.origin
        return (d - self.direction * d.dot(self.direction)).length()


@dataclass(frozen=True, slots=True)
class Cone:
    apex: Vector3
    axis: Vector3
    half_angle: float

    def __post_init__(self) -> None:
        if abs(self.axis.length() - 1.0) > 1e-9:
            raise ValueError("cone axis must be unit length")
        if not 0.0 < self.half_angle < math.pi / 2:
            raise ValueError("cone half angle must lie in (0, pi/2)")

    @classmethod
    def from_pose(cls, pose: Pose, half_angle: float) -> Cone:
        return cls(pose.position, pose.forward().normalized(), half_angle)


def angle_between(a: Vector3, b: Vector3) -> float:
    """Unsigned angle between two non-zero vectors, in [0, pi]."""
    # atan2 form stays accurate near 0 and pi where acos does not
    return math.atan2(a.cross(b).length(), a.dot(b))


def angle_to_axis(cone: Cone, point: Vector3) -> float:
    offset = point - cone.apex
    if offset.length() <= 1e-12:
        raise ValueError("point coincident with apex")
    return angle_between(cone.axis, offset)


def wrap_angle(angle: float) -> float:
    """Map an angle into (-pi, pi]."""
    wrapped = math.remainder(angle, 2.0 * math.pi)
    if wrapped == -math.pi:
        return math.pi
    return wrapped


def twist_angle(q: UnitQuaternion, axis: Vector3) -> float:
    """Signed angle of the twist part of ``q`` about unit ``axis`` (swing-twist split)."""
    w, x, y, z = q.w, q.x, q.y, q.z
    if w < 0.0:
        w, x, y, z = -w, -x, -y, -z
    projection = x * axis.x + y * axis.y + z * axis.z
    if projection == 0.0 and w == 0.0:
        # pure 180 degree swing: twist is undefined, report none
        return 0.0
    return wrap_angle(2.0 * math.atan2(projection, w))


def roll_about_forward(orientation: UnitQuaternion, reference: UnitQuaternion) -> float:
    """Signed roll of ``orientation`` about the controller forward axis, relative to ``reference``.

    Positive values are a rightward tilt (the controller's up vector turns
    toward its +X side).
    """
    relative = reference.conjugate() * orientation
    return twist_angle(relative, FORWARD)
