"""``purifier`` command line.

Exit codes: 0 success, 1 runtime error, 2 invalid configuration,
3 desync or peer fault.

Settings resolve as command-line flag > scenario file > built-in default.
The seed additionally falls back to ``$PURIFIER_SEED`` before the default.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import tempfile
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from . import harness
from .scenario import ScenarioError, load_scenario, resolve_seed
from .sync import (DesyncError, HandshakeError, PeerLost, ProtocolError, Role, SessionConfig,
                   Listener, connect, parse_endpoint)

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_FAULT = 0, 1, 2, 3
OUTPUT_FILES = ("metrics.json", "attempts.csv", "summary.txt")

log = logging.getLogger("purifier")


class ConfigError(Exception):
    pass


def _print_result(result: dict, as_json: bool) -> None:
    if as_json:
        print(json.dumps(result, sort_keys=True))
        return
    width = max(len(k) for k in result)
    for key in sorted(result):
        print(f"{key.ljust(width)}  {result[key]}")


def _overrides(args) -> dict:
    return {
        "seed": args.seed,
        "tick_rate": args.tick_rate,
        "sigma_deg": args.sigma_deg,
        "half_angle_deg": args.half_angle_deg,
        "theta_max_deg": args.theta_max_deg,
    }


def cmd_run(args) -> int:
    scenario = load_scenario(args.scenario, _overrides(args))
    metrics = harness.run_scenario(scenario)
    metrics.write(args.out)
    print(metrics.summary_txt(), end="")
    return EXIT_OK


def cmd_bench_select(args) -> int:
    if args.attempts < 1:
        raise ConfigError("--attempts must be at least 1")
    if args.distance <= 0:
        raise ConfigError("--distance must be positive")
    if args.sigma_deg < 0:
        raise ConfigError("--sigma-deg must be non-negative")
    if not 0 < args.half_angle_deg < 90:
        raise ConfigError("--half-angle-deg must lie in (0, 90)")
    if args.target_angular_radius_deg is not None:
        if not 0 <= args.target_angular_radius_deg < 90:
            raise ConfigError("--target-angular-radius-deg must lie in [0, 90)")
        radius = args.distance * math.sin(math.radians(args.target_angular_radius_deg))
    else:
        if args.target_radius < 0:
            raise ConfigError("--target-radius must be non-negative")
        radius = args.target_radius
    seed = resolve_seed(None, args.seed)
    sigma = math.radians(args.sigma_deg)
    half = math.radians(args.half_angle_deg)
    rate = harness.selection_benchmark(args.distance, radius, sigma, args.attempts,
                                       args.technique, half, seed)
    threshold = math.asin(min(1.0, radius / args.distance))
    if args.technique == "flashlight":
        threshold += half
    _print_result({
        "technique": args.technique, "attempts": args.attempts, "seed": seed,
        "distance": args.distance, "target_radius": radius, "sigma_deg": args.sigma_deg,
        "half_angle_deg": args.half_angle_deg, "rate": rate,
        "rayleigh_rate": harness.rayleigh_hit_rate(threshold, sigma),
    }, args.json)
    return EXIT_OK


def cmd_bench_reel(args) -> int:
    if args.base_speed <= 0:
        raise ConfigError("--base-speed must be positive")
    if args.tick_rate <= 0:
        raise ConfigError("--tick-rate must be positive")
    if not 0 < args.theta_max_deg <= 180:
        raise ConfigError("--theta-max-deg must lie in (0, 180]")
    goal = args.start + args.distance
    try:
        ticks = harness.reel_benchmark(args.start, goal, args.technique,
                                       math.radians(args.tilt_deg), args.base_speed,
                                       1.0 / args.tick_rate, math.radians(args.theta_max_deg))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    _print_result({"technique": args.technique, "start": args.start, "goal": goal,
                   "tilt_deg": args.tilt_deg, "ticks": ticks,
                   "seconds": ticks / args.tick_rate}, args.json)
    return EXIT_OK


def cmd_coop(args) -> int:
    if (args.listen is None) == (args.connect is None):
        raise ConfigError("give exactly one of --listen or --connect")
    scenario = load_scenario(args.scenario, _overrides(args))
    role = Role(args.role)
    config = SessionConfig(scenario.scenario_id, scenario.seed, scenario.tick_rate)
    try:
        endpoint = parse_endpoint(args.listen or args.connect)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if args.listen:
        listener = Listener(endpoint)
        try:
            session = listener.accept(role, config, timeout=args.timeout,
                                      digest_interval=scenario.digest_interval)
        finally:
            listener.close()
    else:
        session = connect(endpoint, role, config, timeout=args.timeout,
                          digest_interval=scenario.digest_interval)
    try:
        metrics = harness.run_coop(scenario, session, args.inject_bitflip)
    finally:
        session.close()
    metrics.write(args.out)
    print(f"{role.value}: session complete, final digest {metrics.metrics['final_digest']['hash']}")
    return EXIT_OK


def golden_dir() -> Path:
    return Path(str(resources.files("purifier") / "golden"))


def _render(scenario_path: Path) -> dict[str, bytes]:
    with tempfile.TemporaryDirectory() as tmp:
        harness.run_scenario(load_scenario(scenario_path)).write(tmp)
        return {name: (Path(tmp) / name).read_bytes() for name in OUTPUT_FILES}


def cmd_verify(args) -> int:
    root = Path(args.golden_dir) if args.golden_dir else golden_dir()
    scenarios = sorted(root.glob("*.json"))
    if not scenarios:
        raise ConfigError(f"no golden scenarios in {root}")
    failures = 0
    for path in scenarios:
        first, second = _render(path), _render(path)
        problems = [f"{n} differs between reruns" for n in OUTPUT_FILES if first[n] != second[n]]
        expected_dir = path.with_suffix(".expected")
        if args.update:
            expected_dir.mkdir(exist_ok=True)
            for name, data in first.items():
                (expected_dir / name).write_bytes(data)
        elif expected_dir.is_dir():
            for name in OUTPUT_FILES:
                ref = expected_dir / name
                if not ref.exists() or ref.read_bytes() != first[name]:
                    problems.append(f"{name} differs from {ref}")
        status = "FAIL" if problems else "ok"
        print(f"{status:4}  {path.name}" + ("".join(f"\n      {p}" for p in problems)))
        failures += bool(problems)
    return EXIT_RUNTIME if failures else EXIT_OK


def _add_scenario_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None,
                   help="RNG seed; overrides the scenario file, which overrides $PURIFIER_SEED")
    p.add_argument("--tick-rate", type=float, default=None,
                   help="simulation rate in Hz (scenario default 90)")
    p.add_argument("--sigma-deg", type=float, default=None,
                   help="aim-noise standard deviation in degrees (scenario default 0)")
    p.add_argument("--half-angle-deg", type=float, default=None,
                   help="FLOW-MATCH cone half-angle in degrees (scenario default 10)")
    p.add_argument("--theta-max-deg", type=float, default=None,
                   help="RAWR-XD wrist roll giving full multiplier, degrees (scenario default 60)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="purifier", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write metrics.json, attempts.csv, "
                                     "summary.txt")
    run.add_argument("scenario", help="scenario JSON file")
    run.add_argument("--out", default=".", help="output directory (default: current directory)")
    _add_scenario_overrides(run)
    run.set_defaults(func=cmd_run)

    bench = sub.add_parser("bench", help="selection and reel benchmarks")
    bench_sub = bench.add_subparsers(dest="bench", required=True)

    sel = bench_sub.add_parser("select", help="Monte-Carlo selection success rate under aim noise")
    sel.add_argument("--technique", choices=("ray", "flashlight"), default="flashlight",
                     help="selection technique (default flashlight)")
    sel.add_argument("--distance", type=float, default=50.0,
                     help="target distance in metres (default 50)")
    sel.add_argument("--target-radius", type=float, default=0.0,
                     help="target bounding radius in metres; 0 means point-like (default 0)")
    sel.add_argument("--target-angular-radius-deg", type=float, default=None,
                     help="target angular radius in degrees; overrides --target-radius")
    sel.add_argument("--sigma-deg", type=float, default=2.0,
                     help="aim-noise standard deviation in degrees (default 2)")
    sel.add_argument("--half-angle-deg", type=float, default=5.0,
                     help="flashlight cone half-angle in degrees (default 5)")
    sel.add_argument("--attempts", type=int, default=100_000,
                     help="number of selection attempts, >= 1 (default 100000)")
    sel.add_argument("--seed", type=int, default=None,
                     help="RNG seed (default $PURIFIER_SEED, else 0)")
    sel.add_argument("--json", action="store_true", help="print one JSON object instead of a table")
    sel.set_defaults(func=cmd_bench_select)

    reel = bench_sub.add_parser("reel", help="ticks to reel an object a given distance")
    reel.add_argument("--technique", choices=("fishing-reel", "rawr-xd"), default="rawr-xd",
                      help="reel technique (default rawr-xd)")
    reel.add_argument("--distance", type=float, default=10.0,
                      help="signed reel distance in metres; negative reels in (default 10)")
    reel.add_argument("--start", type=float, default=1.0,
                      help="starting depth along the ray in metres (default 1)")
    reel.add_argument("--tilt-deg", type=float, default=0.0,
                      help="constant wrist roll in degrees, right positive (default 0)")
    reel.add_argument("--base-speed", type=float, default=2.0,
                      help="base reel speed in m/s (default 2)")
    reel.add_argument("--tick-rate", type=float, default=90.0,
                      help="simulation rate in Hz (default 90)")
    reel.add_argument("--theta-max-deg", type=float, default=60.0,
                      help="roll at which the multiplier saturates, degrees (default 60)")
    reel.add_argument("--json", action="store_true", help="print one JSON object instead of a table")
    reel.set_defaults(func=cmd_bench_reel)

    coop = sub.add_parser("coop", help="run one role of a two-process lockstep session")
    coop.add_argument("scenario", help="scenario JSON file (must match the peer's)")
    coop.add_argument("--role", choices=[r.value for r in Role], required=True,
                      help="this process's role")
    coop.add_argument("--listen", metavar="HOST:PORT", default=None,
                      help="wait for the peer on this address")
    coop.add_argument("--connect", metavar="HOST:PORT", default=None,
                      help="connect to a listening peer at this address")
    coop.add_argument("--out", default=".", help="output directory (default: current directory)")
    coop.add_argument("--timeout", type=float, default=5.0,
                      help="seconds to wait for the peer before giving up (default 5)")
    coop.add_argument("--inject-bitflip", type=int, metavar="TICK", default=None,
                      help="testing aid: corrupt one bit of local state after TICK")
    _add_scenario_overrides(coop)
    coop.set_defaults(func=cmd_coop)

    verify = sub.add_parser("verify", help="rerun bundled golden scenarios and diff outputs")
    verify.add_argument("--golden-dir", default=None,
                        help="directory of golden scenarios (default: the bundled set)")
    verify.add_argument("--update", action="store_true",
                        help="rewrite the expected outputs instead of checking them")
    verify.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ScenarioError, ConfigError, HandshakeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DesyncError, PeerLost, ProtocolError) as exc:
        print(f"fault: {exc}", file=sys.stderr)
        return EXIT_FAULT
    except Exception as exc:  # noqa: BLE001 - top-level report
        log.debug("runtime failure", exc_info=True)
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
