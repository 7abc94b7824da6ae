"""Transport-free orchestrator core.

One SessionHub owns one session: it admits peers (exactly one headset,
at most one researcher, any number of observers), funnels researcher
commands into the state machine, fans session events back out, mirrors
headset poses to the watchers, and logs every message it sends or
receives.  All methods are synchronous and take explicit times; the
WebSocket/TCP adapters and the in-process test harness drive the same
code.  Calls must arrive from a single logical owner (one event loop
or one test loop): the hub itself takes no locks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from . import protocol as proto
from . import session as sess
from .config import StudyConfig
from .eventlog import LogRecord, LogWriter


@dataclass
class Peer:
    peer_id: str
    role: str
    send: Callable[[str], None]


class SessionHub:
    def __init__(
        self,
        config: StudyConfig,
        *,
        log: LogWriter | None = None,
        session_id: str | None = None,
        heartbeat_ms: int = 250,
        rules: tuple[sess.BiometricRule, ...] = (),
    ):
        self.session = sess.new_session(config)
        self.session_id = session_id or config.session_label
        self.log = log
        self.heartbeat_ms = heartbeat_ms
        self.peers: dict[str, Peer] = {}
        self.latest_pose: proto.Pose | None = None
        self.rules_engine = sess.BiometricEngine(rules) if rules else None
        self._last_heartbeat: int | None = None

    # -- peer lifecycle ------------------------------------------------------

    def _role_counts(self) -> dict[str, int]:
        counts = {"researcher": 0, "headset": 0, "observer": 0}
        for p in self.peers.values():
            counts[p.role] += 1
        return counts

    def connect(
        self, peer_id: str, hello: proto.Hello, send: Callable[[str], None], now_ms: int
    ) -> bool:
        """Admit a peer from its Hello; replies Welcome or Err.

        Returns False when rejected; the caller should close the
        connection after flushing the Err.
        """
        self._log_in(hello, hello.role, now_ms)
        reject: proto.Err | None = None
        if hello.protocol_version != proto.PROTOCOL_VERSION:
            reject = proto.Err("bad_version", f"protocol version {hello.protocol_version} unsupported")
        elif hello.role not in proto.ROLES:
            reject = proto.Err("bad_role", f"unknown role {hello.role!r}")
        elif hello.session_id is not None and hello.session_id != self.session_id:
            reject = proto.Err("unknown_session", f"no session {hello.session_id!r} here")
        else:
            counts = self._role_counts()
            if hello.role == "headset" and counts["headset"] >= 1:
                reject = proto.Err("role_taken", "a headset is already connected")
            elif hello.role == "researcher" and counts["researcher"] >= 1:
                reject = proto.Err("role_taken", "a researcher is already connected")
        if reject is not None:
            self._log_out(reject, hello.role, now_ms)
            send(proto.encode(reject))
            return False
        peer = Peer(peer_id=peer_id, role=hello.role, send=send)
        self.peers[peer_id] = peer
        welcome = proto.Welcome(
            session_id=self.session_id,
            server_time_ms=now_ms,
            state=sess.state_name(self.session.state),
            position_ms=self.session.position_ms(now_ms),
        )
        self._send(peer, welcome, now_ms)
        return True

    def disconnect(self, peer_id: str) -> None:
        self.peers.pop(peer_id, None)

    # -- inbound -------------------------------------------------------------

    def handle_text(self, peer_id: str, text: str, now_ms: int) -> None:
        peer = self.peers.get(peer_id)
        if peer is None:
            return
        try:
            msg = proto.decode(text)
        except proto.ProtocolError as exc:
            self._send(peer, proto.Err("bad_message", str(exc)), now_ms)
            return
        self._log_in(msg, peer.role, now_ms)
        match msg:
            case proto.Cmd(command=command):
                if peer.role != "researcher":
                    self._send(peer, proto.Err("forbidden", "only the researcher may send commands"), now_ms)
                    return
                self._apply(peer, command, now_ms)
            case proto.Pose() as pose:
                if peer.role != "headset":
                    self._send(peer, proto.Err("forbidden", "only the headset sends poses"), now_ms)
                    return
                self.latest_pose = pose
                self._mirror(pose, now_ms)
            case proto.Biometric(t_ms=t, pulse_bpm=bpm):
                if peer.role != "headset":
                    self._send(peer, proto.Err("forbidden", "only the headset sends biometrics"), now_ms)
                    return
                if self.rules_engine is not None:
                    for action in self.rules_engine.push(t, bpm):
                        self._apply(None, action, now_ms)
            case proto.Ping(t0_ms=t0):
                self._send(peer, proto.Pong(t0_ms=t0, server_time_ms=now_ms), now_ms)
            case proto.CueAck():
                pass  # logged above; nothing to do
            case proto.Hello():
                self._send(peer, proto.Err("bad_message", "already joined"), now_ms)
            case _:
                self._send(peer, proto.Err("bad_message", "unexpected message for this role"), now_ms)

    # -- time ----------------------------------------------------------------

    def advance(self, now_ms: int) -> None:
        """Run the scheduler at now_ms and heartbeat the session state."""
        self.session, events = sess.tick(self.session, now_ms)
        if events:
            self._broadcast_events(events, now_ms)
        if self._last_heartbeat is None or now_ms - self._last_heartbeat >= self.heartbeat_ms:
            self._broadcast_state(now_ms, skipped=())
            self._last_heartbeat = now_ms

    # -- internals -------------------------------------------------------------

    def _apply(self, peer: Peer | None, command: sess.Command, now_ms: int) -> None:
        try:
            self.session, events = sess.apply_command(self.session, command, now_ms)
        except sess.CommandError as exc:
            if peer is not None:
                self._send(peer, proto.Err(exc.code, str(exc)), now_ms)
            return
        self._broadcast_events(events, now_ms)

    def _broadcast_events(self, events: list[sess.Event], now_ms: int) -> None:
        skipped = tuple(e.cue_id for e in events if isinstance(e, sess.CueSkipped))
        for event in events:
            if isinstance(event, sess.CueFired):
                self._broadcast(proto.CueMsg(cue=event.cue, position_ms=event.position_ms), now_ms)
        state_changed = any(isinstance(e, (sess.StateChanged, sess.SessionCompleted)) for e in events)
        if state_changed or skipped:
            self._broadcast_state(now_ms, skipped=skipped)
            self._last_heartbeat = now_ms

    def _broadcast_state(self, now_ms: int, skipped: tuple[str, ...]) -> None:
        msg = proto.State(
            state=sess.state_name(self.session.state),
            position_ms=self.session.position_ms(now_ms),
            skipped=skipped,
        )
        self._broadcast(msg, now_ms)

    def _mirror(self, pose: proto.Pose, now_ms: int) -> None:
        for peer in list(self.peers.values()):
            if peer.role in ("researcher", "observer"):
                self._send(peer, pose, now_ms)

    def _broadcast(self, msg: proto.Message, now_ms: int) -> None:
        for peer in list(self.peers.values()):
            self._send(peer, msg, now_ms)

    def _send(self, peer: Peer, msg: proto.Message, now_ms: int) -> None:
        self._log_out(msg, peer.role, now_ms)
        peer.send(proto.encode(msg))

    def _log_in(self, msg: proto.Message, role: str, now_ms: int) -> None:
        if self.log is not None:
            self.log.append(LogRecord(t_recv_ms=now_ms, direction="in", peer_role=role, msg=msg))

    def _log_out(self, msg: proto.Message, role: str, now_ms: int) -> None:
        if self.log is not None:
            self.log.append(LogRecord(t_recv_ms=now_ms, direction="out", peer_role=role, msg=msg))
