import threading
import time

import pytest
from hypothesis import given, strategies as st

from purifier.geometry import Pose, UnitQuaternion, Vector3
from purifier.sync import (ConfigMismatch, DesyncError, InputFrame, Listener, PeerLost,
                           ProtocolError, Role, RoleTaken, SessionConfig, StateDigest, connect,
                           decode, encode, fnv1a64, lockstep_advance, parse_endpoint)

CONFIG = SessionConfig("demo:0123", 5, 90)
LOOPBACK = ("127.0.0.1", 0)


def frame(tick, role, trigger=False, reel=0.0):
    p = Pose(Vector3(0.1 * tick, 1.7, 0.0), UnitQuaternion.from_axis_angle(Vector3(0, 1, 0), 0.01 * tick))
    return InputFrame(tick, role, p, p, p, trigger, reel)


def test_fnv_reference_vectors():
    assert fnv1a64(b"") == 0xCBF29CE484222325
    assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C
    assert fnv1a64(b"foobar") == 0x85944171F73967E8


def test_digest_hex_is_16_digits():
    assert StateDigest.of(3, b"").hex == "cbf29ce484222325"


finite = st.floats(-1e6, 1e6, allow_nan=False)


@given(st.integers(0, 10 ** 6), st.sampled_from(list(Role)), finite, finite, finite,
       st.booleans(), st.floats(-1, 1))
def test_input_frame_round_trip(tick, role, x, y, z, trig, reel):
    p = Pose(Vector3(x, y, z), UnitQuaternion.from_axis_angle(Vector3(1, 2, 3), 0.4))
    f = InputFrame(tick, role, p, p, p, trig, reel)
    assert InputFrame.from_wire(decode(encode(f.to_wire()))) == f


def test_encode_is_canonical_single_line():
    line = encode({"t": "digest", "tick": 29, "hash": "00ff"})
    assert line == b'{"hash":"00ff","t":"digest","tick":29}\n'


def test_unknown_type_is_protocol_error():
    with pytest.raises(ProtocolError, match="unknown message type"):
        decode(b'{"t":"hello"}')
    with pytest.raises(ProtocolError):
        decode(b"not json")


def test_parse_endpoint():
    assert parse_endpoint("127.0.0.1:7000") == ("127.0.0.1", 7000)
    with pytest.raises(ValueError):
        parse_endpoint("nohost")


def pair(timeout=2.0, config_b=CONFIG, role_a=Role.COLLECTOR, role_b=Role.MEDIC):
    """Listen as role_a in a thread; connect as role_b. Returns (a, b) or raises b's error."""
    listener = Listener(LOOPBACK)
    out = {}

    def serve():
        try:
            out["a"] = listener.accept(role_a, CONFIG, timeout=timeout)
        except Exception as exc:  # surfaced to the test below
            out["a_error"] = exc

    t = threading.Thread(target=serve)
    t.start()
    try:
        b = connect(listener.address, role_b, config_b, timeout=timeout)
    finally:
        t.join()
        listener.close()
    return out["a"], b


def test_handshake_succeeds():
    a, b = pair()
    assert (a.role, a.peer_role) == (Role.COLLECTOR, Role.MEDIC)
    assert (b.role, b.peer_role) == (Role.MEDIC, Role.COLLECTOR)
    a.close()
    b.close()


def test_second_collector_rejected():
    listener = Listener(LOOPBACK)
    out = {}
    t = threading.Thread(target=lambda: out.setdefault(
        "a", listener.accept(Role.COLLECTOR, CONFIG, timeout=3.0)))
    t.start()
    with pytest.raises(RoleTaken):
        connect(listener.address, Role.COLLECTOR, CONFIG, timeout=2.0)
    # the listener keeps waiting and still accepts the right role
    medic = connect(listener.address, Role.MEDIC, CONFIG, timeout=2.0)
    t.join()
    listener.close()
    out["a"].close()
    medic.close()


def test_seed_mismatch_aborts():
    listener = Listener(LOOPBACK)
    errors = []

    def serve():
        try:
            listener.accept(Role.COLLECTOR, CONFIG, timeout=2.0)
        except Exception as exc:
            errors.append(exc)

    t = threading.Thread(target=serve)
    t.start()
    with pytest.raises(ConfigMismatch):
        connect(listener.address, Role.MEDIC, SessionConfig(CONFIG.scenario, 6, 90), timeout=2.0)
    t.join()
    listener.close()
    assert isinstance(errors[0], ConfigMismatch)


def test_lockstep_stalls_then_delivers_identical_steps():
    a, b = pair()
    try:
        assert lockstep_advance(a, frame(0, Role.COLLECTOR), wait=0.05) is None
        assert a.current_tick == 0  # no tick skipped
        sb = b.step(frame(0, Role.MEDIC, trigger=True))
        sa = a.step(frame(0, Role.COLLECTOR))
        assert sa == sb
        assert sa.tick == 0 and sa[Role.MEDIC].trigger
        for tick in range(1, 8):
            b.advance(frame(tick, Role.MEDIC))
            sa = a.step(frame(tick, Role.COLLECTOR))
            sb = b.step(frame(tick, Role.MEDIC))
            assert sa == sb and sa.tick == tick
    finally:
        a.close()
        b.close()


def test_wrong_tick_or_role_rejected():
    a, b = pair()
    try:
        with pytest.raises(ValueError, match="expected input for tick 0"):
            a.advance(frame(3, Role.COLLECTOR))
        with pytest.raises(ValueError, match="role violation"):
            a.advance(frame(0, Role.MEDIC))
    finally:
        a.close()
        b.close()


def test_peer_sending_our_role_is_protocol_error():
    a, b = pair()
    try:
        b.send(frame(0, Role.COLLECTOR).to_wire())
        with pytest.raises(ProtocolError, match="role violation"):
            a.step(frame(0, Role.COLLECTOR))
    finally:
        a.close()
        b.close()


def test_timeout_reports_peer_lost():
    a, b = pair(timeout=0.3)
    try:
        start = time.monotonic()
        with pytest.raises(PeerLost, match="peer lost"):
            a.step(frame(0, Role.COLLECTOR))
        assert time.monotonic() - start < 2.0
    finally:
        a.close()
        b.close()


def test_closed_peer_reports_peer_lost():
    a, b = pair()
    b.close()
    with pytest.raises(PeerLost):
        a.step(frame(0, Role.COLLECTOR))
    a.close()


def test_digest_mismatch_is_desync_on_both_sides():
    a, b = pair()
    try:
        a.submit_digest(StateDigest.of(29, b"state"))
        b.submit_digest(StateDigest.of(29, b"statf"))
        with pytest.raises(DesyncError, match="desync at tick 29"):
            b.step(frame(0, Role.MEDIC))
        with pytest.raises(DesyncError, match="desync at tick 29"):
            a.step(frame(0, Role.COLLECTOR))
    finally:
        a.close()
        b.close()


def test_matching_digests_and_clean_finish():
    a, b = pair()
    results = {}
    t = threading.Thread(target=lambda: results.setdefault("b", b.finish(StateDigest.of(9, b"x"))))
    t.start()
    a.finish(StateDigest.of(9, b"x"))
    t.join()
    assert a.local_digests == a.remote_digests == b.local_digests
