"""Wire protocol between researcher console, orchestrator and headset.

Messages are single-line JSON objects with a ``"type"`` discriminator
and a ``"v": 1`` version key.  Unknown extra keys are tolerated on
decode; missing required keys, unknown types and other versions are
rejected.  A field that is present but undecodable is reported as
``missing_field`` with the field name.

Over WebSocket each message rides in one text frame.  Over raw TCP,
frames are a 4-byte big-endian payload length followed by the UTF-8
payload (16 MiB cap).

The server is the time authority: clients run one ping/pong exchange
and attach server-aligned timestamps to their pose samples using
:func:`estimate_offset`.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass

from . import config as cfg
from . import session as sess

PROTOCOL_VERSION = 1
MAX_FRAME_BYTES = 16 * 1024 * 1024

ROLES = ("researcher", "headset", "observer")
STATE_LABELS = ("loaded", "running", "paused", "completed")


class ProtocolError(Exception):
    """Undecodable message; ``code`` is one of bad_json, unknown_type,
    bad_version, missing_field."""

    def __init__(self, code: str, detail=None):
        self.code = code
        self.detail = detail
        super().__init__(f"{code}" + (f": {detail}" if detail is not None else ""))


class FrameError(Exception):
    def __init__(self, code: str, message: str = ""):
        self.code = code  # oversize | truncated
        super().__init__(message or code)


# --- message variants -----------------------------------------------------


@dataclass(frozen=True)
class Hello:
    role: str
    protocol_version: int = PROTOCOL_VERSION
    session_id: str | None = None


@dataclass(frozen=True)
class Welcome:
    """Handshake reply; ``state`` is a label from STATE_LABELS.

    The running state's wall-clock anchor is server-internal; only the
    label and the timeline position travel on the wire.
    """

    session_id: str
    server_time_ms: int
    state: str
    position_ms: int = 0


@dataclass(frozen=True)
class Cmd:
    command: sess.Command


@dataclass(frozen=True)
class State:
    state: str
    position_ms: int
    skipped: tuple[str, ...] = ()


@dataclass(frozen=True)
class CueMsg:
    cue: cfg.Cue
    position_ms: int | None = None


@dataclass(frozen=True)
class CueAck:
    cue_id: str
    t_ms: int


@dataclass(frozen=True)
class Pose:
    t_ms: int
    q: tuple[float, float, float, float]


@dataclass(frozen=True)
class Biometric:
    t_ms: int
    pulse_bpm: float


@dataclass(frozen=True)
class Ping:
    t0_ms: int


@dataclass(frozen=True)
class Pong:
    t0_ms: int
    server_time_ms: int


@dataclass(frozen=True)
class Err:
    code: str
    message: str = ""


Message = Hello | Welcome | Cmd | State | CueMsg | CueAck | Pose | Biometric | Ping | Pong | Err


# --- encode ---------------------------------------------------------------


def _state_fields(state: str, position_ms: int) -> dict:
    if state not in STATE_LABELS:
        raise ValueError(f"unknown state label {state!r}")
    return {"state": state, "position_ms": position_ms}


def _command_fields(command: sess.Command) -> dict:
    match command:
        case sess.Start():
            return {"action": "start"}
        case sess.Pause():
            return {"action": "pause"}
        case sess.Resume():
            return {"action": "resume"}
        case sess.Seek(to_ms=to):
            return {"action": "seek", "to_ms": to}
        case sess.Stop():
            return {"action": "stop"}
        case sess.InjectCue(cue=cue):
            return {"action": "inject_cue", "cue": cfg.cue_to_json(cue)}
    raise ValueError(f"unknown command {command!r}")


def encode(m: Message) -> str:
    """Encode a message as one line of JSON."""
    body: dict
    match m:
        case Hello(role=role, protocol_version=pv, session_id=sid):
            body = {"type": "hello", "role": role, "protocol_version": pv}
            if sid is not None:
                body["session_id"] = sid
        case Welcome(session_id=sid, server_time_ms=st, state=state, position_ms=pos):
            body = {
                "type": "welcome",
                "session_id": sid,
                "server_time_ms": st,
                "state": _state_fields(state, pos),
            }
        case Cmd(command=command):
            body = {"type": "command", **_command_fields(command)}
        case State(state=state, position_ms=pos, skipped=skipped):
            body = {"type": "state", **_state_fields(state, pos)}
            if skipped:
                body["skipped"] = list(skipped)
        case CueMsg(cue=cue, position_ms=pos):
            body = {"type": "cue", "cue": cfg.cue_to_json(cue)}
            if pos is not None:
                body["position_ms"] = pos
        case CueAck(cue_id=cid, t_ms=t):
            body = {"type": "cue_ack", "cue_id": cid, "t_ms": t}
        case Pose(t_ms=t, q=q):
            body = {"type": "pose", "t_ms": t, "q": [float(c) for c in q]}
        case Biometric(t_ms=t, pulse_bpm=bpm):
            body = {"type": "biometric", "t_ms": t, "pulse_bpm": bpm}
        case Ping(t0_ms=t0):
            body = {"type": "ping", "t0_ms": t0}
        case Pong(t0_ms=t0, server_time_ms=st):
            body = {"type": "pong", "t0_ms": t0, "server_time_ms": st}
        case Err(code=code, message=message):
            body = {"type": "error", "code": code, "message": message}
        case _:
            raise ValueError(f"not a protocol message: {m!r}")
    body["v"] = PROTOCOL_VERSION
    return json.dumps(body, separators=(",", ":"))


# --- decode ---------------------------------------------------------------


def _field(obj: dict, name: str, kind):
    if name not in obj:
        raise ProtocolError("missing_field", name)
    value = obj[name]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ProtocolError("missing_field", name)
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ProtocolError("missing_field", name)
        return value
    if not isinstance(value, kind):
        raise ProtocolError("missing_field", name)
    return value


def _decode_state(obj, name: str) -> tuple[str, int]:
    if not isinstance(obj, dict):
        raise ProtocolError("missing_field", name)
    label = _field(obj, "state", str)
    if label not in STATE_LABELS:
        raise ProtocolError("missing_field", f"{name}.state")
    return label, _field(obj, "position_ms", int)


def _decode_command(obj: dict) -> sess.Command:
    action = _field(obj, "action", str)
    match action:
        case "start":
            return sess.Start()
        case "pause":
            return sess.Pause()
        case "resume":
            return sess.Resume()
        case "seek":
            return sess.Seek(to_ms=_field(obj, "to_ms", int))
        case "stop":
            return sess.Stop()
        case "inject_cue":
            try:
                return sess.InjectCue(cue=cfg.cue_from_json(_field(obj, "cue", dict)))
            except cfg.ParseError as exc:
                raise ProtocolError("missing_field", exc.field or "cue") from exc
    raise ProtocolError("missing_field", "action")


def _decode_quat(obj: dict) -> tuple[float, float, float, float]:
    raw = _field(obj, "q", list)
    if len(raw) != 4:
        raise ProtocolError("missing_field", "q")
    vals = []
    for c in raw:
        if isinstance(c, bool) or not isinstance(c, (int, float)) or not math.isfinite(c):
            raise ProtocolError("missing_field", "q")
        vals.append(float(c))
    norm = math.sqrt(sum(c * c for c in vals))
    if norm < 1e-9:
        raise ProtocolError("missing_field", "q")
    if abs(norm - 1.0) > 1e-6:
        vals = [c / norm for c in vals]
    return (vals[0], vals[1], vals[2], vals[3])


def decode(text: str | bytes) -> Message:
    """Decode one message; raises ProtocolError, never crashes on junk."""
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ProtocolError("bad_json", "invalid utf-8") from exc
    try:
        obj = json.loads(text)
    except Exception as exc:  # malformed, too deep, etc.
        raise ProtocolError("bad_json", str(exc)) from exc
    if not isinstance(obj, dict):
        raise ProtocolError("bad_json", "not an object")
    version = _field(obj, "v", int)
    if version != PROTOCOL_VERSION:
        raise ProtocolError("bad_version", version)
    mtype = _field(obj, "type", str)
    match mtype:
        case "hello":
            role = _field(obj, "role", str)
            if role not in ROLES:
                raise ProtocolError("missing_field", "role")
            sid = obj.get("session_id")
            if sid is not None and not isinstance(sid, str):
                raise ProtocolError("missing_field", "session_id")
            return Hello(role=role, protocol_version=_field(obj, "protocol_version", int), session_id=sid)
        case "welcome":
            state, position = _decode_state(_field(obj, "state", dict), "state")
            return Welcome(
                session_id=_field(obj, "session_id", str),
                server_time_ms=_field(obj, "server_time_ms", int),
                state=state,
                position_ms=position,
            )
        case "command":
            return Cmd(command=_decode_command(obj))
        case "state":
            state, position = _decode_state(obj, "state")
            skipped = obj.get("skipped", [])
            if not isinstance(skipped, list) or not all(isinstance(s, str) for s in skipped):
                raise ProtocolError("missing_field", "skipped")
            return State(state=state, position_ms=position, skipped=tuple(skipped))
        case "cue":
            try:
                cue = cfg.cue_from_json(_field(obj, "cue", dict))
            except cfg.ParseError as exc:
                raise ProtocolError("missing_field", exc.field or "cue") from exc
            pos = obj.get("position_ms")
            if pos is not None and (isinstance(pos, bool) or not isinstance(pos, int)):
                raise ProtocolError("missing_field", "position_ms")
            return CueMsg(cue=cue, position_ms=pos)
        case "cue_ack":
            return CueAck(cue_id=_field(obj, "cue_id", str), t_ms=_field(obj, "t_ms", int))
        case "pose":
            return Pose(t_ms=_field(obj, "t_ms", int), q=_decode_quat(obj))
        case "biometric":
            return Biometric(t_ms=_field(obj, "t_ms", int), pulse_bpm=_field(obj, "pulse_bpm", float))
        case "ping":
            return Ping(t0_ms=_field(obj, "t0_ms", int))
        case "pong":
            return Pong(t0_ms=_field(obj, "t0_ms", int), server_time_ms=_field(obj, "server_time_ms", int))
        case "error":
            return Err(code=_field(obj, "code", str), message=_field(obj, "message", str))
    raise ProtocolError("unknown_type", mtype)


# --- framing (raw TCP transport) -------------------------------------------


def frame(payload: str | bytes) -> bytes:
    """Length-prefix a payload: 4-byte big-endian size, then the bytes."""
    data = payload.encode("utf-8") if isinstance(payload, str) else bytes(payload)
    if len(data) > MAX_FRAME_BYTES:
        raise FrameError("oversize", f"payload of {len(data)} bytes exceeds {MAX_FRAME_BYTES}")
    return struct.pack(">I", len(data)) + data


def unframe(buf: bytes) -> tuple[bytes, bytes]:
    """Split one frame off the front of buf; returns (payload, rest).

    Raises FrameError("truncated") when buf does not hold a whole frame.
    """
    if len(buf) < 4:
        raise FrameError("truncated", "incomplete length prefix")
    (size,) = struct.unpack(">I", buf[:4])
    if size > MAX_FRAME_BYTES:
        raise FrameError("oversize", f"declared {size} bytes exceeds {MAX_FRAME_BYTES}")
    if len(buf) < 4 + size:
        raise FrameError("truncated", f"declared {size} bytes, {len(buf) - 4} available")
    return bytes(buf[4 : 4 + size]), bytes(buf[4 + size :])


class FrameDecoder:
    """Incremental unframer for a byte stream arriving in chunks."""

    def __init__(self):
        self._buf = bytearray()

    def feed(self, chunk: bytes) -> list[bytes]:
        self._buf.extend(chunk)
        out: list[bytes] = []
        while True:
            try:
                payload, rest = unframe(bytes(self._buf))
            except FrameError as exc:
                if exc.code == "oversize":
                    raise
                return out
            out.append(payload)
            self._buf = bytearray(rest)

    def pending_bytes(self) -> int:
        return len(self._buf)


# --- clock alignment --------------------------------------------------------


def estimate_offset(t0_ms: int, server_time_ms: int, t1_ms: int) -> tuple[float, float]:
    """Clock offset and round-trip time from one ping/pong exchange.

    Assumes symmetric network delay: the server stamped its clock at
    t0 + rtt/2 on the client's clock, so offset = server - (t0 + rtt/2).
    Add offset to a local timestamp to get server time.
    """
    if t1_ms < t0_ms:
        raise ValueError("receive time precedes send time")
    rtt = t1_ms - t0_ms
    offset = server_time_ms - (t0_ms + rtt / 2.0)
    return (offset, float(rtt))
