"""Deterministic in-process run: hub + simulated headset, no sockets.

Every peer exchanges *encoded* protocol text, so the full
serialize/parse path is exercised, but delivery is immediate and the
clock is a plain integer the pump advances millisecond by
millisecond.  The same run is byte-for-byte reproducible, which is
what the end-to-end checks lean on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from . import protocol as proto
from . import session as sess
from .config import StudyConfig
from .eventlog import LogWriter
from .hub import SessionHub
from .simulator import HeadsetSim, SimConfig, SimReport


@dataclass
class VirtualRunResult:
    report: SimReport
    final_state: str
    log_path: Path
    researcher_msgs: list[proto.Message] = field(default_factory=list)


def run_virtual(
    cfg: StudyConfig,
    sim_cfg: SimConfig,
    log_path: str | Path,
    *,
    commands: tuple[tuple[int, sess.Command], ...] = ((0, sess.Start()),),
    biometrics: tuple[tuple[int, float], ...] = (),
    rules: tuple[sess.BiometricRule, ...] = (),
    horizon_ms: int | None = None,
    with_observer: bool = False,
) -> VirtualRunResult:
    """Drive one session to completion on a virtual clock.

    ``commands`` are researcher commands by send time; ``biometrics``
    are (t_ms, pulse_bpm) samples the headset reports.  Returns once
    the simulator sees the completed state or the horizon passes.
    """
    log_path = Path(log_path)
    horizon = horizon_ms if horizon_ms is not None else cfg.media.duration_ms + 1000

    with LogWriter(log_path) as log:
        hub = SessionHub(cfg, log=log, rules=rules)
        sim = HeadsetSim(sim_cfg, session_id=hub.session_id)

        sim_inbox: list[str] = []
        researcher_raw: list[str] = []
        observer_raw: list[str] = []

        ok = hub.connect("sim", proto.decode(sim.hello()), sim_inbox.append, 0)
        assert ok, "headset join rejected"
        hello_r = proto.Hello(role="researcher", session_id=hub.session_id)
        ok = hub.connect("res", hello_r, researcher_raw.append, 0)
        assert ok, "researcher join rejected"
        if with_observer:
            hello_o = proto.Hello(role="observer", session_id=hub.session_id)
            assert hub.connect("obs", hello_o, observer_raw.append, 0)

        pending_cmds = sorted(commands, key=lambda tc: tc[0])
        pending_bio = sorted(biometrics, key=lambda tb: tb[0])

        def drain_sim(now: int) -> None:
            while sim_inbox:
                raw = sim_inbox.pop(0)
                for reply in sim.on_message(proto.decode(raw), now):
                    hub.handle_text("sim", reply, now)

        for now in range(0, horizon + 1):
            while pending_cmds and pending_cmds[0][0] <= now:
                _, cmd = pending_cmds.pop(0)
                hub.handle_text("res", proto.encode(proto.Cmd(command=cmd)), now)
            while pending_bio and pending_bio[0][0] <= now:
                t, bpm = pending_bio.pop(0)
                hub.handle_text("sim", proto.encode(proto.Biometric(t_ms=t, pulse_bpm=bpm)), now)
            hub.advance(now)
            drain_sim(now)
            for pose_text in sim.poll(now):
                hub.handle_text("sim", pose_text, now)
            drain_sim(now)
            if sim.completed and not sim_inbox:
                break

        return VirtualRunResult(
            report=sim.report,
            final_state=sess.state_name(hub.session.state),
            log_path=log_path,
            researcher_msgs=[proto.decode(r) for r in researcher_raw],
        )
