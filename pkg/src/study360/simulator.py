"""Headless stand-in for the headset runtime.

The simulator speaks the wire protocol like a real headset: hello as
role headset, one ping/pong clock sync, then pose telemetry at a fixed
rate.  Head motion is either scripted keyframes or goal-seeking (turn
toward each cue's direction at a capped angular speed after a reaction
latency), which is enough to exercise the whole system without
hardware.

The core class is transport-free and clock-free: callers push decoded
messages in and poll it with explicit local times, so tests drive it
from a virtual clock and get bit-identical runs.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from urllib.parse import urlsplit

from . import protocol as proto
from .config import Direction, FRONT, wrap_deg
from .gaze import (
    angular_distance,
    direction_to_quat,
    direction_to_unit,
    unit_to_direction,
)


@dataclass(frozen=True)
class MotionScript:
    """Keyframed head motion: (t_ms, Direction), t strictly increasing from 0."""

    keyframes: tuple[tuple[int, Direction], ...]

    def __post_init__(self):
        if not self.keyframes:
            raise ValueError("motion script needs at least one keyframe")
        if self.keyframes[0][0] != 0:
            raise ValueError("first keyframe must be at t=0")
        for (t0, _), (t1, _) in zip(self.keyframes, self.keyframes[1:]):
            if t1 <= t0:
                raise ValueError("keyframe times must strictly increase")

    @classmethod
    def from_json(cls, doc) -> "MotionScript":
        frames = tuple(
            (int(t), Direction(float(yaw), float(pitch))) for t, yaw, pitch in doc
        )
        return cls(keyframes=frames)


@dataclass(frozen=True)
class Scripted:
    script: MotionScript


@dataclass(frozen=True)
class SeekCues:
    max_speed_deg_per_s: float
    reaction_latency_ms: int = 0
    half_fov_deg: float = 45.0

    def __post_init__(self):
        if self.max_speed_deg_per_s <= 0:
            raise ValueError("max_speed_deg_per_s must be positive")


@dataclass(frozen=True)
class SimConfig:
    behavior: Scripted | SeekCues
    pose_rate_hz: float = 30.0
    start: Direction = FRONT

    def __post_init__(self):
        if not 1.0 <= self.pose_rate_hz <= 90.0:
            raise ValueError("pose_rate_hz must be in [1, 90]")


@dataclass
class SimReport:
    poses_sent: int = 0
    cues_received: int = 0
    cue_acks: int = 0
    # (cue_id, server-aligned t_ms when gaze first came within half_fov)
    alignment_events: list[tuple[str, int]] = field(default_factory=list)


def interpolate_pose(script: MotionScript, t_ms: int) -> Direction:
    """Scripted direction at t: linear in pitch, shortest-arc in yaw,
    clamped to the first/last keyframe outside the script."""
    frames = script.keyframes
    if t_ms <= frames[0][0]:
        return frames[0][1]
    if t_ms >= frames[-1][0]:
        return frames[-1][1]
    for (t0, d0), (t1, d1) in zip(frames, frames[1:]):
        if t0 <= t_ms <= t1:
            f = (t_ms - t0) / (t1 - t0)
            pitch = d0.pitch_deg + (d1.pitch_deg - d0.pitch_deg) * f
            yaw = wrap_deg(d0.yaw_deg + wrap_deg(d1.yaw_deg - d0.yaw_deg) * f)
            return Direction(yaw, pitch)
    raise AssertionError("unreachable")


def _perpendicular(v) -> tuple[float, float, float]:
    x, y, z = v
    # cross with whichever axis is least aligned
    if abs(y) < 0.9:
        px, py, pz = -z, 0.0, x  # v x (0, 1, 0)
    else:
        px, py, pz = 0.0, z, -y  # v x (1, 0, 0)
    n = math.sqrt(px * px + py * py + pz * pz)
    return (px / n, py / n, pz / n)


def seek_step(current: Direction, target: Direction, dt_ms: float, max_speed_deg_per_s: float) -> Direction:
    """One goal-seeking step: rotate along the great circle toward the
    target by at most max_speed * dt, landing exactly on the target
    once it is within a single step."""
    if dt_ms < 0:
        raise ValueError("dt_ms must be non-negative")
    gap = angular_distance(current, target)
    step = max_speed_deg_per_s * dt_ms / 1000.0
    if step >= gap or gap == 0.0:
        return target
    v0 = direction_to_unit(current)
    v1 = direction_to_unit(target)
    dot = sum(a * b for a, b in zip(v0, v1))
    w = tuple(b - dot * a for a, b in zip(v0, v1))
    norm = math.sqrt(sum(c * c for c in w))
    if norm < 1e-12:
        u = _perpendicular(v0)  # antipodal target: any great circle works
    else:
        u = tuple(c / norm for c in w)
    ang = math.radians(step)
    moved = tuple(a * math.cos(ang) + b * math.sin(ang) for a, b in zip(v0, u))
    return unit_to_direction(moved)


class HeadsetSim:
    """Protocol-level headset simulator core.

    Usage: send ``hello()``; feed every inbound message through
    ``on_message``; call ``poll`` on the pose schedule.  Both return
    encoded outbound messages.  Times are the *local* clock; pose
    timestamps go out server-aligned once the ping/pong sync is done.
    """

    def __init__(self, sim: SimConfig, session_id: str | None = None):
        self.sim = sim
        self.session_id = session_id
        self.report = SimReport()
        self.offset_ms = 0.0
        self.rtt_ms = 0.0
        self.completed = False
        self.current = sim.start
        self._synced = False
        self._started_at: int | None = None
        self._last_move_t: int | None = None
        self._next_pose_idx = 0
        self._target: Direction | None = None
        self._target_cue: str | None = None
        self._target_from_t = 0
        self._aligned: set[str] = set()

    # -- handshake ----------------------------------------------------------

    def hello(self) -> str:
        return proto.encode(proto.Hello(role="headset", session_id=self.session_id))

    def on_welcome(self, local_now_ms: int) -> str:
        """Start the clock sync; call once after Welcome arrives."""
        return proto.encode(proto.Ping(t0_ms=local_now_ms))

    # -- inbound ------------------------------------------------------------

    def on_message(self, msg: proto.Message, local_now_ms: int) -> list[str]:
        out: list[str] = []
        match msg:
            case proto.Welcome():
                out.append(self.on_welcome(local_now_ms))
            case proto.Pong(t0_ms=t0, server_time_ms=server_t):
                self.offset_ms, self.rtt_ms = proto.estimate_offset(t0, server_t, local_now_ms)
                self._synced = True
                self._start_motion(local_now_ms)
            case proto.CueMsg(cue=cue):
                self.report.cues_received += 1
                out.append(proto.encode(proto.CueAck(cue_id=cue.id, t_ms=self.server_time(local_now_ms))))
                self.report.cue_acks += 1
                if isinstance(self.sim.behavior, SeekCues):
                    # Arrows and haptics point at their target; text sits at its anchor.
                    aim = cue.target if cue.target is not None else cue.anchor
                    self._target = aim
                    self._target_cue = cue.id
                    self._target_from_t = local_now_ms + self.sim.behavior.reaction_latency_ms
            case proto.State(state=label):
                if label == "completed":
                    self.completed = True
            case proto.Err(code=code, message=message):
                raise RuntimeError(f"server error {code}: {message}")
            case _:
                pass
        return out

    # -- pose schedule -------------------------------------------------------

    def server_time(self, local_now_ms: int) -> int:
        return int(round(local_now_ms + self.offset_ms))

    def next_pose_at(self) -> int | None:
        """Local time of the next due pose, or None before sync."""
        if self._started_at is None:
            return None
        return self._started_at + int(self._next_pose_idx * 1000.0 / self.sim.pose_rate_hz)

    def _start_motion(self, local_now_ms: int) -> None:
        self._started_at = local_now_ms
        self._last_move_t = local_now_ms

    def _move_to(self, local_now_ms: int) -> None:
        if self._last_move_t is None:
            return
        if isinstance(self.sim.behavior, Scripted):
            assert self._started_at is not None
            self.current = interpolate_pose(self.sim.behavior.script, local_now_ms - self._started_at)
        elif self._target is not None:
            begin = max(self._last_move_t, self._target_from_t)
            dt = local_now_ms - begin
            if dt > 0:
                self.current = seek_step(
                    self.current, self._target, dt, self.sim.behavior.max_speed_deg_per_s
                )
        self._last_move_t = local_now_ms

    def poll(self, local_now_ms: int) -> list[str]:
        """Emit every pose due at or before local_now_ms."""
        out: list[str] = []
        while True:
            due = self.next_pose_at()
            if due is None or due > local_now_ms or self.completed:
                break
            self._move_to(due)
            q = direction_to_quat(self.current)
            out.append(proto.encode(proto.Pose(t_ms=self.server_time(due), q=q)))
            self.report.poses_sent += 1
            self._check_alignment(due)
            self._next_pose_idx += 1
        return out

    def _check_alignment(self, local_t_ms: int) -> None:
        if not isinstance(self.sim.behavior, SeekCues):
            return
        if self._target is None or self._target_cue in self._aligned:
            return
        gap = angular_distance(self.current, self._target)
        if gap <= self.sim.behavior.half_fov_deg + 1e-9:
            self._aligned.add(self._target_cue)
            self.report.alignment_events.append((self._target_cue, self.server_time(local_t_ms)))


# --- live connections --------------------------------------------------------


class _WsTransport:
    def __init__(self, url: str):
        from websockets.sync.client import connect

        self._conn = connect(url)

    def send(self, text: str) -> None:
        self._conn.send(text)

    def recv(self, timeout_s: float) -> str | None:
        from websockets.exceptions import ConnectionClosed

        try:
            data = self._conn.recv(timeout=timeout_s)
        except TimeoutError:
            return None
        except ConnectionClosed:
            raise ConnectionError("server closed the connection") from None
        return data if isinstance(data, str) else data.decode("utf-8")

    def close(self) -> None:
        self._conn.close()


class _TcpTransport:
    def __init__(self, host: str, port: int):
        import socket

        self._sock = socket.create_connection((host, port))
        self._decoder = proto.FrameDecoder()
        self._queue: list[str] = []

    def send(self, text: str) -> None:
        self._sock.sendall(proto.frame(text))

    def recv(self, timeout_s: float) -> str | None:
        if self._queue:
            return self._queue.pop(0)
        self._sock.settimeout(max(timeout_s, 0.001))
        try:
            chunk = self._sock.recv(65536)
        except TimeoutError:
            return None
        if not chunk:
            raise ConnectionError("server closed the connection")
        self._queue.extend(p.decode("utf-8") for p in self._decoder.feed(chunk))
        return self._queue.pop(0) if self._queue else None

    def close(self) -> None:
        self._sock.close()


def _open_transport(endpoint: str):
    parsed = urlsplit(endpoint)
    if parsed.scheme in ("ws", "wss"):
        return _WsTransport(endpoint)
    if parsed.scheme == "tcp":
        if parsed.hostname is None or parsed.port is None:
            raise ValueError(f"tcp endpoint needs host:port, got {endpoint!r}")
        return _TcpTransport(parsed.hostname, parsed.port)
    raise ValueError(f"unsupported endpoint scheme {parsed.scheme!r}")


def run_sim(
    endpoint: str, sim_cfg: SimConfig, duration_ms: int, session_id: str | None = None
) -> SimReport:
    """Connect to a live server and act as the headset.

    Poses flow for duration_ms (counted from clock sync) unless the
    session completes first.  Raises on refused connections and
    rejected handshakes.
    """
    transport = _open_transport(endpoint)
    sim = HeadsetSim(sim_cfg, session_id=session_id)
    origin = time.monotonic()

    def local_now() -> int:
        return int((time.monotonic() - origin) * 1000)

    deadline: int | None = None
    try:
        transport.send(sim.hello())
        while not sim.completed:
            now = local_now()
            if deadline is not None and now >= deadline:
                break
            due = sim.next_pose_at()
            wait_s = 0.05 if due is None else max(0.0, (due - now) / 1000.0)
            text = transport.recv(min(wait_s, 0.05))
            now = local_now()
            if text is not None:
                for reply in sim.on_message(proto.decode(text), now):
                    transport.send(reply)
                if deadline is None and sim._started_at is not None:
                    deadline = sim._started_at + duration_ms
            for pose_text in sim.poll(now):
                transport.send(pose_text)
    except ConnectionError:
        pass
    finally:
        transport.close()
    return sim.report
