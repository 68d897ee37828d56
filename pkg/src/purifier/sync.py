"""Two-peer lockstep session over a reliable byte stream.

Each peer runs the same deterministic simulation. Per tick they swap input
frames and only advance once both frames for that tick are present. Every
``digest_interval`` ticks they swap a 64-bit FNV-1a hash of their state; a
mismatch ends the session as a desync.

Wire format: one canonical JSON object per line (UTF-8, sorted keys, no
whitespace). Message types, by the ``"t"`` field::

    {"t":"join","role":...,"scenario":...,"seed":...,"tick_rate":...}
    {"t":"input","tick":n,"role":...,"head":P,"primary_controller":P,
     "secondary_controller":P,"trigger":bool,"reel_input":x}
    {"t":"digest","tick":n,"hash":"<16 hex digits>"}
    {"t":"bye"}                     (optional "reason")

where a pose ``P`` is ``{"position":[x,y,z],"orientation":[w,x,y,z]}``.
"""
from __future__ import annotations

import enum
import json
import logging
import math
import queue
import socket
import threading
import time
from dataclasses import dataclass
from typing import Any, Optional

from .geometry import Pose, UnitQuaternion, Vector3

log = logging.getLogger(__name__)

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
MASK64 = (1 << 64) - 1

DEFAULT_DIGEST_INTERVAL = 30
DEFAULT_TIMEOUT = 5.0
MESSAGE_TYPES = frozenset({"join", "input", "digest", "bye"})


class SyncError(Exception):
    pass


class HandshakeError(SyncError):
    pass


class RoleTaken(HandshakeError):
    pass


class ConfigMismatch(HandshakeError):
    pass


class ProtocolError(SyncError):
    pass


class PeerLost(SyncError):
    pass


class DesyncError(SyncError):
    pass


class Role(str, enum.Enum):
    COLLECTOR = "collector"
    MEDIC = "medic"

    @property
    def other(self) -> Role:
        return Role.MEDIC if self is Role.COLLECTOR else Role.COLLECTOR


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & MASK64
    return h


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False,
                      allow_nan=False)


@dataclass(frozen=True)
class StateDigest:
    tick: int
    hash: int

    @classmethod
    def of(cls, tick: int, state_bytes: bytes) -> StateDigest:
        return cls(tick, fnv1a64(state_bytes))

    @property
    def hex(self) -> str:
        return f"{self.hash:016x}"


def pose_to_wire(pose: Pose) -> dict:
    return {"position": pose.position.as_list(), "orientation": pose.orientation.as_list()}


def pose_from_wire(data: dict) -> Pose:
    w, x, y, z = (float(v) for v in data["orientation"])
    return Pose(Vector3.of(data["position"]), UnitQuaternion(w, x, y, z))


@dataclass(frozen=True)
class InputFrame:
    tick: int
    role: Role
    head: Pose
    primary_controller: Pose
    secondary_controller: Pose
    trigger: bool = False
    reel_input: float = 0.0

    def __post_init__(self) -> None:
        if self.tick < 0:
            raise ValueError("tick must be non-negative")
        if not (math.isfinite(self.reel_input) and -1.0 <= self.reel_input <= 1.0):
            raise ValueError("reel_input must be finite and within [-1, 1]")
        object.__setattr__(self, "role", Role(self.role))

    def to_wire(self) -> dict:
        return {
            "t": "input",
            "tick": self.tick,
            "role": self.role.value,
            "head": pose_to_wire(self.head),
            "primary_controller": pose_to_wire(self.primary_controller),
            "secondary_controller": pose_to_wire(self.secondary_controller),
            "trigger": self.trigger,
            "reel_input": self.reel_input,
        }

    @classmethod
    def from_wire(cls, msg: dict) -> InputFrame:
        try:
            return cls(
                tick=int(msg["tick"]),
                role=Role(msg["role"]),
                head=pose_from_wire(msg["head"]),
                primary_controller=pose_from_wire(msg["primary_controller"]),
                secondary_controller=pose_from_wire(msg["secondary_controller"]),
                trigger=bool(msg["trigger"]),
                reel_input=float(msg["reel_input"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed input frame: {exc}") from exc


@dataclass(frozen=True)
class SimStep:
    """Both roles' inputs for one tick, identical on both peers."""

    tick: int
    inputs: dict

    def __getitem__(self, role: Role) -> InputFrame:
        return self.inputs[role]


def encode(msg: dict) -> bytes:
    return (canonical_json(msg) + "\n").encode("utf-8")


def decode(line: bytes | str) -> dict:
    if isinstance(line, bytes):
        line = line.decode("utf-8")
    try:
        msg = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"invalid JSON: {exc}") from exc
    if not isinstance(msg, dict) or "t" not in msg:
        raise ProtocolError("message is not an object with a 't' field")
    if msg["t"] not in MESSAGE_TYPES:
        raise ProtocolError(f"unknown message type {msg['t']!r}")
    return msg


@dataclass(frozen=True)
class SessionConfig:
    scenario: str
    seed: int
    tick_rate: float

    def join_message(self, role: Role) -> dict:
        return {"t": "join", "role": role.value, "scenario": self.scenario,
                "seed": self.seed, "tick_rate": self.tick_rate}


def check_join(msg: dict, role: Role, config: SessionConfig) -> Role:
    """Validate a peer's join against ours; return the peer's role."""
    if msg.get("t") != "join":
        raise ProtocolError(f"expected join, got {msg.get('t')!r}")
    try:
        peer_role = Role(msg["role"])
    except (KeyError, ValueError) as exc:
        raise ProtocolError("join without a valid role") from exc
    if peer_role is role:
        raise RoleTaken("role taken")
    theirs = (msg.get("scenario"), msg.get("seed"), msg.get("tick_rate"))
    ours = (config.scenario, config.seed, config.tick_rate)
    if theirs != ours:
        raise ConfigMismatch(f"config mismatch: peer {theirs} vs local {ours}")
    return peer_role


_EOF = object()


class Session:
    """One established lockstep session. Single owner; a reader thread feeds a queue."""

    def __init__(self, sock: socket.socket, role: Role, peer_role: Role, config: SessionConfig,
                 *, timeout: float = DEFAULT_TIMEOUT,
                 digest_interval: int = DEFAULT_DIGEST_INTERVAL):
        self.sock = sock
        self.role = role
        self.peer_role = peer_role
        self.config = config
        self.timeout = timeout
        self.digest_interval = digest_interval
        self.current_tick = 0
        self.local_digests: dict[int, str] = {}
        self.remote_digests: dict[int, str] = {}
        self._remote_inputs: dict[int, InputFrame] = {}
        self._sent_tick = -1
        self._waiting_since: Optional[float] = None
        self._peer_gone: Optional[str] = None
        self._lock = threading.Lock()
        self._inbox: queue.Queue = queue.Queue()
        self.sock.settimeout(None)
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    # -- transport -------------------------------------------------------
    def _read_loop(self) -> None:
        try:
            with self.sock.makefile("rb") as stream:
                for line in stream:
                    if line.strip():
                        self._inbox.put(line)
        except OSError:
            pass
        self._inbox.put(_EOF)

    def send(self, msg: dict) -> None:
        try:
            with self._lock:
                self.sock.sendall(encode(msg))
        except OSError as exc:
            raise PeerLost("peer lost") from exc

    def _pump(self, wait: float) -> None:
        try:
            item = self._inbox.get(timeout=wait) if wait > 0 else self._inbox.get_nowait()
        except queue.Empty:
            return
        while True:
            self._handle(item)
            try:
                item = self._inbox.get_nowait()
            except queue.Empty:
                return

    def _handle(self, item) -> None:
        if item is _EOF:
            self._peer_gone = self._peer_gone or "connection closed"
            return
        msg = decode(item)
        kind = msg["t"]
        if kind == "input":
            frame = InputFrame.from_wire(msg)
            if frame.role is not self.peer_role:
                raise ProtocolError(f"role violation: peer sent {frame.role.value} input")
            if frame.tick < self.current_tick or frame.tick in self._remote_inputs:
                raise ProtocolError(f"duplicate or stale input for tick {frame.tick}")
            self._remote_inputs[frame.tick] = frame
        elif kind == "digest":
            self.remote_digests[int(msg["tick"])] = str(msg["hash"])
            self._check_digests()
        elif kind == "bye":
            reason = str(msg.get("reason", "bye"))
            if reason.startswith("desync"):
                raise DesyncError(reason)
            self._peer_gone = reason
        else:
            raise ProtocolError(f"unexpected {kind!r} message mid-session")

    def _check_digests(self) -> None:
        for tick in sorted(self.local_digests.keys() & self.remote_digests.keys()):
            if self.local_digests[tick] != self.remote_digests[tick]:
                reason = f"desync at tick {tick}"
                try:
                    self.send({"t": "bye", "reason": reason})
                except PeerLost:
                    pass
                raise DesyncError(reason)

    # -- lockstep --------------------------------------------------------
    def advance(self, local: InputFrame, wait: float = 0.0) -> Optional[SimStep]:
        """Offer the local input for the current tick.

        Returns the tick's :class:`SimStep` once the peer's input has arrived,
        otherwise ``None`` (call again with the same frame). Raises
        :class:`PeerLost` after ``timeout`` seconds without the peer's input.
        """
        if local.tick != self.current_tick:
            raise ValueError(f"expected input for tick {self.current_tick}, got {local.tick}")
        if local.role is not self.role:
            raise ValueError(f"role violation: {self.role.value} session given "
                             f"{local.role.value} input")
        if self._sent_tick < local.tick:
            self.send(local.to_wire())
            self._sent_tick = local.tick
            self._waiting_since = time.monotonic()
        self._pump(wait)
        remote = self._remote_inputs.pop(local.tick, None)
        if remote is not None:
            self.current_tick += 1
            self._waiting_since = None
            return SimStep(local.tick, {self.role: local, self.peer_role: remote})
        if self._peer_gone is not None:
            raise PeerLost(f"peer lost ({self._peer_gone})")
        if time.monotonic() - self._waiting_since > self.timeout:
            raise PeerLost("peer lost (timeout)")
        return None

    def step(self, local: InputFrame, poll: float = 0.05) -> SimStep:
        while True:
            result = self.advance(local, wait=poll)
            if result is not None:
                return result

    def digest_due(self, tick: int) -> bool:
        return (tick + 1) % self.digest_interval == 0

    def submit_digest(self, digest: StateDigest) -> None:
        self.local_digests[digest.tick] = digest.hex
        self.send({"t": "digest", "tick": digest.tick, "hash": digest.hex})
        self._check_digests()

    def finish(self, final: Optional[StateDigest] = None) -> None:
        """Send the final digest and bye, then wait for the peer to do the same."""
        if final is not None and final.tick not in self.local_digests:
            self.submit_digest(final)
        self.send({"t": "bye"})
        deadline = time.monotonic() + self.timeout
        while self._peer_gone is None:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise PeerLost("peer lost (no bye)")
            self._pump(min(remaining, 0.05))
        missing = set(self.local_digests) - set(self.remote_digests)
        if missing:
            raise PeerLost(f"peer left before confirming digests {sorted(missing)}")
        self.close()

    def close(self) -> None:
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()


def lockstep_advance(session: Session, local: InputFrame, wait: float = 0.0) -> Optional[SimStep]:
    return session.advance(local, wait)


def _read_message(sock: socket.socket, deadline: float) -> dict:
    buf = bytearray()
    while not buf.endswith(b"\n"):
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            raise PeerLost("peer lost (handshake timeout)")
        sock.settimeout(remaining)
        try:
            chunk = sock.recv(1)
        except socket.timeout:
            continue
        if not chunk:
            raise PeerLost("peer lost (closed during handshake)")
        buf += chunk
    return decode(bytes(buf))


def parse_endpoint(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"endpoint must look like HOST:PORT, got {text!r}")
    return host, int(port)


class Listener:
    """Accepts a peer for a session. Peers claiming our role are turned away."""

    def __init__(self, endpoint: tuple[str, int]):
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self.sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self.sock.bind(endpoint)
        self.sock.listen(4)

    @property
    def address(self) -> tuple[str, int]:
        return self.sock.getsockname()[:2]

    def accept(self, role: Role, config: SessionConfig, *, timeout: float = DEFAULT_TIMEOUT,
               digest_interval: int = DEFAULT_DIGEST_INTERVAL) -> Session:
        deadline = time.monotonic() + timeout
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise PeerLost("peer lost (nobody joined)")
            self.sock.settimeout(remaining)
            try:
                conn, _ = self.sock.accept()
            except socket.timeout:
                continue
            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            try:
                peer_role = check_join(_read_message(conn, deadline), role, config)
            except RoleTaken as exc:
                log.warning("rejecting peer: %s", exc)
                _reject(conn, str(exc))
                continue
            except (HandshakeError, ProtocolError) as exc:
                _reject(conn, str(exc))
                raise
            except PeerLost:
                conn.close()
                continue
            conn.sendall(encode(config.join_message(role)))
            return Session(conn, role, peer_role, config, timeout=timeout,
                           digest_interval=digest_interval)

    def close(self) -> None:
        self.sock.close()


def _reject(conn: socket.socket, reason: str) -> None:
    try:
        conn.sendall(encode({"t": "bye", "reason": reason}))
    except OSError:
        pass
    conn.close()


def connect(endpoint: tuple[str, int], role: Role, config: SessionConfig, *,
            timeout: float = DEFAULT_TIMEOUT,
            digest_interval: int = DEFAULT_DIGEST_INTERVAL) -> Session:
    deadline = time.monotonic() + timeout
    while True:
        try:
            sock = socket.create_connection(endpoint, timeout=max(0.05, deadline - time.monotonic()))
            break
        except OSError:
            if time.monotonic() >= deadline:
                raise PeerLost(f"peer lost (cannot reach {endpoint[0]}:{endpoint[1]})")
            time.sleep(0.05)
    sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    sock.sendall(encode(config.join_message(role)))
    reply = _read_message(sock, deadline)
    if reply["t"] == "bye":
        sock.close()
        reason = str(reply.get("reason", "rejected"))
        if reason.startswith("role taken"):
            raise RoleTaken(reason)
        if reason.startswith("config mismatch"):
            raise ConfigMismatch(reason)
        raise HandshakeError(reason)
    try:
        peer_role = check_join(reply, role, config)
    except SyncError:
        sock.close()
        raise
    return Session(sock, role, peer_role, config, timeout=timeout,
                   digest_interval=digest_interval)


def session_handshake(endpoint: tuple[str, int], role: Role, config: SessionConfig, *,
                      listen: bool = False, timeout: float = DEFAULT_TIMEOUT,
                      digest_interval: int = DEFAULT_DIGEST_INTERVAL) -> Session:
    """Establish a session, either by listening on or connecting to ``endpoint``."""
    role = Role(role)
    if not listen:
        return connect(endpoint, role, config, timeout=timeout, digest_interval=digest_interval)
    listener = Listener(endpoint)
    try:
        return listener.accept(role, config, timeout=timeout, digest_interval=digest_interval)
    finally:
        listener.close()
