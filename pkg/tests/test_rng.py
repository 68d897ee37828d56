import math

import pytest
from hypothesis import given, strategies as st

from purifier.geometry import UnitQuaternion, Vector3
from purifier.rng import AimNoise, SplitMix64


def test_splitmix_reference_values():
    # published reference outputs for seed 0
    rng = SplitMix64(0)
    assert [rng.next_u64() for _ in range(3)] == [
        0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


def test_uniform_uses_top_bits():
    assert SplitMix64(0).uniform() == (0xE220A8397B1DCDAF >> 11) / 2 ** 53


@given(st.integers(0, 2 ** 64 - 1))
def test_uniform_in_unit_interval(seed):
    rng = SplitMix64(seed)
    for _ in range(20):
        assert 0.0 <= rng.uniform() < 1.0


@given(st.integers(0, 2 ** 64 - 1))
def test_same_seed_same_stream(seed):
    a, b = SplitMix64(seed), SplitMix64(seed)
    assert [a.normal_pair() for _ in range(5)] == [b.normal_pair() for _ in range(5)]


def test_normal_moments():
    rng = SplitMix64(12345)
    xs = [z for _ in range(20000) for z in rng.normal_pair()]
    mean = sum(xs) / len(xs)
    var = sum((x - mean) ** 2 for x in xs) / len(xs)
    assert abs(mean) < 0.02 and abs(var - 1) < 0.03


def test_zero_sigma_keeps_orientation():
    q = UnitQuaternion.from_axis_angle(Vector3(0, 1, 0), 0.3)
    turned, dev = AimNoise(0.0, 4).perturb(q)
    assert turned is q and dev == 0.0


def test_deviation_is_angle_of_yaw_pitch():
    noise, probe = AimNoise(0.05, 9), AimNoise(0.05, 9)
    yaw, pitch = probe.sample()
    _, dev = noise.perturb(UnitQuaternion.identity())
    # forward after yaw then pitch in the local frame has cos(dev) = cos(yaw) cos(pitch)
    assert math.cos(dev) == pytest.approx(math.cos(yaw) * math.cos(pitch), abs=1e-12)
