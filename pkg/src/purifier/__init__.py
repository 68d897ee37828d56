"""Headless VR selection and manipulation techniques with a deterministic co-op harness."""
from .geometry import Cone, Pose, Ray, UnitQuaternion, Vector3, angle_to_axis, roll_about_forward
from .homer import homer_grab, homer_release, homer_update, flow_match_tick
from .reel import reel_tick, rawr_xd_tick, wrist_multiplier
from .scene import Scene, SceneObject, rover_step, try_collect, try_medicate
from .selection import flashlight_select, ray_select

__version__ = "0.1.0"

__all__ = [
    "Cone", "Pose", "Ray", "UnitQuaternion", "Vector3", "angle_to_axis", "roll_about_forward",
    "homer_grab", "homer_release", "homer_update", "flow_match_tick",
    "reel_tick", "rawr_xd_tick", "wrist_multiplier",
    "Scene", "SceneObject", "rover_step", "try_collect", "try_medicate",
    "flashlight_select", "ray_select",
]
