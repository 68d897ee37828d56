import math
import threading

import pytest

from purifier.cli import golden_dir
from purifier.harness import (World, rayleigh_hit_rate, reel_benchmark, run_coop, run_scenario,
                              selection_benchmark)
from purifier.scenario import load_scenario
from purifier.sync import DesyncError, Listener, Role, SessionConfig, connect

GOLDEN = golden_dir()


def golden(name, **overrides):
    return load_scenario(GOLDEN / f"{name}.json", overrides)


def test_empty_route_ends_on_timer():
    m = run_scenario(golden("empty_one_leg"))
    s = m.summary
    assert (s["trash_collected"], s["wildlife_healed"], s["stops_fully_cleared"]) == (0, 0, 0)
    assert m.metrics["completed"]
    assert [st["reason"] for st in m.metrics["stops"]] == ["timer_expired"]


def test_single_trash_is_collected():
    m = run_scenario(golden("single_trash"))
    assert m.summary["trash_collected"] == 1
    assert m.metrics["stops"][0]["reason"] == "objectives_complete"


def test_run_is_byte_deterministic():
    a = run_scenario(golden("three_stop"))
    b = run_scenario(golden("three_stop"))
    assert a.metrics_json() == b.metrics_json()
    assert a.attempts_csv() == b.attempts_csv()


def test_seed_changes_attempt_log():
    a = run_scenario(golden("three_stop"))
    b = run_scenario(golden("three_stop", seed=123))
    assert a.attempts_csv() != b.attempts_csv()
    assert a.attempts_csv().splitlines()[0] == b.attempts_csv().splitlines()[0]


def test_three_stop_summary_and_transitions():
    m = run_scenario(golden("three_stop"))
    s = m.summary
    assert (s["trash_collected"], s["wildlife_healed"], s["stops_fully_cleared"]) == (2, 2, 2)
    reasons = [st["reason"] for st in m.metrics["stops"]]
    assert reasons == ["objectives_complete", "timer_expired", "objectives_complete"]


def test_digest_schedule():
    world = World(golden("single_trash"))
    m = run_scenario(golden("single_trash"))
    ticks = [d["tick"] for d in m.metrics["digests"]]
    assert ticks == list(range(world.scenario.digest_interval - 1, m.metrics["ticks"], 30))


def test_bitflip_changes_digest():
    world = World(golden("single_trash"))
    before = world.digest()
    world.inject_bitflip()
    assert world.digest().hash != before.hash


def test_rayleigh_oracle_values():
    assert rayleigh_hit_rate(math.radians(0.5), math.radians(2)) == pytest.approx(0.0308, abs=5e-5)
    assert rayleigh_hit_rate(math.radians(5), math.radians(2)) == pytest.approx(0.9561, abs=5e-5)
    assert rayleigh_hit_rate(0.1, 0.0) == 1.0


@pytest.mark.parametrize("technique", ["ray", "flashlight"])
def test_perfect_aim_always_hits(technique):
    assert selection_benchmark(50.0, 0.5, 0.0, 50, technique) == 1.0


def test_selection_benchmark_small_sample_near_oracle():
    rate = selection_benchmark(50.0, 0.0, math.radians(2), 4000, "flashlight", math.radians(5), 1)
    assert abs(rate - 0.9561) < 0.02


def test_selection_benchmark_rejects_zero_attempts():
    with pytest.raises(ValueError):
        selection_benchmark(50.0, 0.0, 0.01, 0, "ray")


def test_reel_benchmark_examples():
    assert reel_benchmark(1.0, 11.0, "fishing-reel") == 450
    assert reel_benchmark(1.0, 11.0, "rawr-xd", math.radians(60)) == 90
    assert reel_benchmark(3.0, 3.0) == 0
    assert reel_benchmark(11.0, 1.0, "fishing-reel") == 450


def test_reel_benchmark_unreachable():
    with pytest.raises(ValueError, match="unreachable"):
        reel_benchmark(1.0, 500.0)


def coop_pair(scenario, flip_at=None):
    config = SessionConfig(scenario.scenario_id, scenario.seed, scenario.tick_rate)
    listener = Listener(("127.0.0.1", 0))
    out = {}

    def side(name, make, flip):
        try:
            session = make()
            out[name] = run_coop(scenario, session, flip)
        except Exception as exc:
            out[name] = exc

    a = threading.Thread(target=side, args=(
        "collector", lambda: listener.accept(Role.COLLECTOR, config), flip_at))
    b = threading.Thread(target=side, args=(
        "medic", lambda: connect(listener.address, Role.MEDIC, config), None))
    a.start()
    b.start()
    a.join()
    b.join()
    listener.close()
    return out


def test_coop_matches_single_process_run():
    scenario = golden("three_stop")
    out = coop_pair(scenario)
    solo = run_scenario(scenario).metrics_json()
    assert out["collector"].metrics_json() == out["medic"].metrics_json() == solo


def test_coop_bitflip_is_desync_within_interval():
    out = coop_pair(golden("single_trash"), flip_at=10)
    for role in ("collector", "medic"):
        assert isinstance(out[role], DesyncError)
        tick = int(str(out[role]).rsplit(" ", 1)[1])
        assert 10 < tick <= 10 + 30
