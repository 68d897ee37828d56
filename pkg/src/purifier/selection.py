"""Target acquisition by ray-casting and by a Flashlight cone."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Collection, Optional

from .geometry import Cone, Ray, angle_to_axis
from .scene import ObjectKind, Scene, SceneObject

log = logging.getLogger(__name__)

DEFAULT_MAX_RANGE = 200.0
TIE_EPSILON = 1e-9


@dataclass(frozen=True)
class SelectionResult:
    object_id: Optional[str]
    score: float
    candidates_considered: int

    @property
    def hit(self) -> bool:
        return self.object_id is not None


def _candidates(scene: Scene, kinds: Optional[Collection[ObjectKind]]) -> list[SceneObject]:
    objs = scene.selectable()
    if kinds is not None:
        objs = [o for o in objs if o.kind in kinds]
    return objs


def ray_sphere_parameter(ray: Ray, center, radius: float) -> Optional[float]:
    """Smallest non-negative ``t`` with ``ray.at(t)`` inside the closed ball, or None."""
    oc = center - ray.origin
    b = oc.dot(ray.direction)
    c = oc.dot(oc) - radius * radius
    if c <= 0.0:
        return 0.0  # origin already inside the ball
    disc = b * b - c
    if disc < 0.0 or b < 0.0:
        return None
    t = b - math.sqrt(disc)
    return t if t >= 0.0 else 0.0


def ray_select(ray: Ray, scene: Scene, *, kinds: Optional[Collection[ObjectKind]] = None,
               max_range: float = DEFAULT_MAX_RANGE) -> SelectionResult:
    best_id, best_t = None, math.inf
    considered = 0
    for obj in _candidates(scene, kinds):
        if obj.position.distance_to(ray.origin) > max_range:
            continue
        considered += 1
        t = ray_sphere_parameter(ray, obj.position, obj.bounding_radius)
        if t is not None and t < best_t:
            best_id, best_t = obj.id, t
    if best_id is None:
        return SelectionResult(None, math.inf, considered)
    return SelectionResult(best_id, best_t, considered)


def angular_radius(obj: SceneObject, distance: float) -> float:
    return math.asin(min(1.0, obj.bounding_radius / distance))


def in_cone(cone: Cone, obj: SceneObject) -> Optional[float]:
    """Angle to the cone axis if ``obj`` is a member of the cone, else None.

    Spheres are handled by inflating the cone by the object's angular radius.
    """
    distance = obj.position.distance_to(cone.apex)
    angle = angle_to_axis(cone, obj.position)
    if angle - angular_radius(obj, distance) <= cone.half_angle:
        return angle
    return None


def flashlight_select(cone: Cone, scene: Scene, *,
                      kinds: Optional[Collection[ObjectKind]] = None,
                      max_range: float = DEFAULT_MAX_RANGE) -> SelectionResult:
    best: Optional[tuple[float, float, str]] = None
    considered = 0
    for obj in _candidates(scene, kinds):
        distance = obj.position.distance_to(cone.apex)
        if distance > max_range:
            continue
        considered += 1
        if distance <= 1e-12:
            log.debug("skipping %s: centre coincides with cone apex", obj.id)
            continue
        angle = in_cone(cone, obj)
        if angle is None:
            continue
        if best is None or angle < best[0] - TIE_EPSILON or (
            abs(angle - best[0]) <= TIE_EPSILON and distance < best[1]
        ):
            best = (angle, distance, obj.id)
    if best is None:
        return SelectionResult(None, math.inf, considered)
    return SelectionResult(best[2], best[0], considered)
