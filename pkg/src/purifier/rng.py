"""Portable seeded randomness.

The generator is SplitMix64, chosen because it is tiny and easy to reproduce
bit-for-bit in any language:

    state  = (state + 0x9E3779B97F4A7C15) mod 2**64
    z      = state
    z      = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2**64
    z      = ((z ^ (z >> 27)) * 0x94D049BB133111EB) mod 2**64
    output = z ^ (z >> 31)

Uniform doubles take the top 53 bits: ``(output >> 11) * 2**-53`` in [0, 1).
Normal deviates come in pairs from one Box-Muller draw that consumes two
uniforms in order ``u1, u2``::

    r = sqrt(-2 ln(1 - u1))
    (r cos(2 pi u2), r sin(2 pi u2))
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import RIGHT, UP, UnitQuaternion, angle_between

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    def __init__(self, seed: int = 0):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def normal_pair(self) -> tuple[float, float]:
        u1 = self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(1.0 - u1))
        theta = 2.0 * math.pi * u2
        return r * math.cos(theta), r * math.sin(theta)


@dataclass
class AimNoise:
    """Isotropic angular pointing error.

    Each selection attempt draws one ``(yaw, pitch)`` pair of independent
    N(0, sigma**2) deviates and turns the aim direction by them in the
    controller's own frame.
    """

    sigma: float = 0.0
    seed: int = 0
    rng: SplitMix64 = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not self.sigma >= 0.0:
            raise ValueError("sigma must be non-negative")
        self.rng = SplitMix64(self.seed)

    def sample(self) -> tuple[float, float]:
        z0, z1 = self.rng.normal_pair()
        return z0 * self.sigma, z1 * self.sigma

    def perturb(self, orientation: UnitQuaternion) -> tuple[UnitQuaternion, float]:
        """Return the perturbed orientation and its angular deviation from the original."""
        yaw, pitch = self.sample()
        if yaw == 0.0 and pitch == 0.0:
            return orientation, 0.0
        turned = orientation * UnitQuaternion.from_axis_angle(UP, yaw) \
            * UnitQuaternion.from_axis_angle(RIGHT, pitch)
        turned = turned.normalized()
        return turned, angle_between(orientation.forward(), turned.forward())
