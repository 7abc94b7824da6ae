"""Reference implementations the scheduler tests compare against.

The reference session steps wall time one millisecond at a time and
carries the timeline position as an explicitly incremented counter —
no anchor arithmetic — applying commands at their scheduled instants
and emitting fires at the schedule's tick instants.  It shares no code
with study360.session; agreement is the point of the test.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from study360 import session as sess
from study360.config import StudyConfig


@dataclass
class RefOutcome:
    fired: list[tuple[str, int]] = field(default_factory=list)  # (id, position)
    skipped: list[str] = field(default_factory=list)
    final_state: str = "loaded"


ScheduleItem = tuple[int, object]  # (wall_ms, "tick" | Command)


def reference_run(cfg: StudyConfig, schedule: list[ScheduleItem]) -> RefOutcome:
    duration = cfg.media.duration_ms
    pending: dict[str, int] = {c.id: c.at_ms for c in cfg.cues}
    out = RefOutcome()

    mode = "loaded"
    position = 0

    def due_now() -> list[tuple[int, str]]:
        return sorted((at, cid) for cid, at in pending.items() if at <= position)

    def fire_due() -> None:
        for at, cid in due_now():
            del pending[cid]
            out.fired.append((cid, position))

    events_at: dict[int, list[object]] = {}
    for wall, item in schedule:
        events_at.setdefault(wall, []).append(item)
    horizon = max(events_at) if events_at else 0

    for wall in range(0, horizon + 1):
        if wall > 0 and mode == "running" and position < duration:
            position += 1
        for item in events_at.get(wall, ()):
            if item == "tick":
                if mode != "running":
                    continue
                fire_due()
                if position >= duration:
                    mode = "completed"
                continue
            mode, position = _apply_ref_command(
                item, mode, position, duration, pending, out
            )

    out.final_state = mode
    return out


def _apply_ref_command(cmd, mode, position, duration, pending, out):
    """The declared transition table, restated; rejected commands are no-ops
    (the implementation raises CommandError, which the driver swallows)."""
    match cmd:
        case sess.Start():
            if mode == "loaded":
                mode = "running"
                position = 0
        case sess.Pause():
            if mode == "running":
                mode = "paused"
        case sess.Resume():
            if mode == "paused":
                mode = "running"
        case sess.Seek(to_ms=to):
            if mode in ("running", "paused") and 0 <= to <= duration:
                if to > position:
                    jumped = sorted(
                        (at, cid)
                        for cid, at in pending.items()
                        if position < at <= to
                    )
                    for _at, cid in jumped:
                        del pending[cid]
                        out.skipped.append(cid)
                position = to
        case sess.Stop():
            if mode != "completed":
                mode = "completed"
        case sess.InjectCue(cue=cue):
            taken = set(pending) | {cid for cid, _ in out.fired} | set(out.skipped)
            if (
                mode != "completed"
                and cue.at_ms >= position
                and cue.at_ms <= duration
                and cue.id not in taken
            ):
                pending[cue.id] = cue.at_ms
    return mode, position


def run_impl(cfg: StudyConfig, schedule: list[ScheduleItem]):
    """Drive the real state machine over the same schedule; collect events."""
    s = sess.new_session(cfg)
    fired: list[tuple[str, int]] = []
    skipped: list[str] = []
    for wall, item in schedule:
        if item == "tick":
            s, events = sess.tick(s, wall)
        else:
            try:
                s, events = sess.apply_command(s, item, wall)
            except sess.CommandError:
                events = []
        for event in events:
            if isinstance(event, sess.CueFired):
                fired.append((event.cue.id, event.position_ms))
            elif isinstance(event, sess.CueSkipped):
                skipped.append(event.cue_id)
    return fired, skipped, sess.state_name(s.state), s


# --- biometric reference ------------------------------------------------------


def reference_biometric_firings(rule: sess.BiometricRule, history) -> list[int]:
    """Brute-force hysteresis: re-derives each run length by backward scan
    instead of carried state; returns firing times."""
    fired: list[int] = []
    armed = True
    for i, (t, value) in enumerate(history):
        holds = rule.holds(value)
        j = i
        while j > 0 and rule.holds(history[j - 1][1]) == holds:
            j -= 1
        run_ms = t - history[j][0]
        if armed and holds and run_ms >= rule.sustain_ms:
            fired.append(t)
            armed = False
        elif not armed and not holds and run_ms >= rule.sustain_ms:
            armed = True
    return fired
