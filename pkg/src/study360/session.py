"""Deterministic session state machine and cue scheduler.

The machine never reads a clock; every transition takes the caller's
``now_ms``, which makes runs replayable and testable.  States:

    Loaded --Start--> Running --Pause--> Paused --Resume--> Running
    any state --Stop--> Completed
    Seek is legal while Running or Paused
    InjectCue is legal while Loaded, Running or Paused

Timeline position is ``now_ms - start_anchor_ms`` while running, frozen
while paused.  A tick fires every due cue in (at_ms, id) order; firing
and skipping are both exactly-once and mutually exclusive per cue id.
Forward seeks skip the cues they jump over (reported, never silent);
backward seeks never re-fire anything.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .config import (
    Cue,
    StudyConfig,
    Violation,
    canonical_direction,
    canonicalize,
    validate_study,
)

# --- states ---------------------------------------------------------------


@dataclass(frozen=True)
class Loaded:
    pass


@dataclass(frozen=True)
class Running:
    start_anchor_ms: int


@dataclass(frozen=True)
class Paused:
    position_ms: int


@dataclass(frozen=True)
class Completed:
    pass


SessionState = Loaded | Running | Paused | Completed


def state_name(state: SessionState) -> str:
    return type(state).__name__.lower()


# --- commands and events --------------------------------------------------


@dataclass(frozen=True)
class Start:
    pass


@dataclass(frozen=True)
class Pause:
    pass


@dataclass(frozen=True)
class Resume:
    pass


@dataclass(frozen=True)
class Seek:
    to_ms: int


@dataclass(frozen=True)
class Stop:
    pass


@dataclass(frozen=True)
class InjectCue:
    cue: Cue


Command = Start | Pause | Resume | Seek | Stop | InjectCue


@dataclass(frozen=True)
class StateChanged:
    state: SessionState


@dataclass(frozen=True)
class CueFired:
    cue: Cue
    position_ms: int


@dataclass(frozen=True)
class CueSkipped:
    cue_id: str


@dataclass(frozen=True)
class SessionCompleted:
    pass


Event = StateChanged | CueFired | CueSkipped | SessionCompleted


class CommandError(Exception):
    """Rejected command; ``code`` says why."""

    def __init__(self, code: str, message: str = ""):
        self.code = code
        super().__init__(message or code)


# --- session --------------------------------------------------------------


@dataclass(frozen=True)
class Session:
    config: StudyConfig
    state: SessionState = field(default_factory=Loaded)
    fired: frozenset[str] = frozenset()
    skipped: frozenset[str] = frozenset()
    injected: tuple[Cue, ...] = ()

    @property
    def duration_ms(self) -> int:
        return self.config.media.duration_ms

    def all_cues(self) -> tuple[Cue, ...]:
        return self.config.cues + self.injected

    def position_ms(self, now_ms: int) -> int:
        """Timeline position at wall time now_ms, clamped to the media."""
        match self.state:
            case Loaded():
                return 0
            case Running(start_anchor_ms=anchor):
                return max(0, min(now_ms - anchor, self.duration_ms))
            case Paused(position_ms=pos):
                return pos
            case Completed():
                return self.duration_ms
        raise AssertionError("unreachable")


def new_session(cfg: StudyConfig) -> Session:
    """Create a Loaded session; cfg must be valid and canonical."""
    violations = validate_study(cfg)
    if violations:
        raise ValueError(f"config has {len(violations)} violation(s): {violations[0]}")
    if canonicalize(cfg) != cfg:
        raise ValueError("config is not canonical; call canonicalize() first")
    return Session(config=cfg)


def _pending(s: Session) -> list[Cue]:
    done = s.fired | s.skipped
    return [c for c in s.all_cues() if c.id not in done]


def _due(s: Session, position_ms: int) -> list[Cue]:
    return sorted(
        (c for c in _pending(s) if c.at_ms <= position_ms),
        key=lambda c: (c.at_ms, c.id),
    )


def tick(s: Session, now_ms: int) -> tuple[Session, list[Event]]:
    """Advance the scheduler; no-op unless Running.

    Fires every pending cue with at_ms <= position in (at_ms, id)
    order.  Once position reaches the media end, remaining due cues
    fire and the session completes.
    """
    if not isinstance(s.state, Running):
        return s, []
    raw = now_ms - s.state.start_anchor_ms
    position = max(0, min(raw, s.duration_ms))
    events: list[Event] = []
    due = _due(s, position)
    if due:
        s = replace(s, fired=s.fired | {c.id for c in due})
        events.extend(CueFired(cue=c, position_ms=position) for c in due)
    if raw >= s.duration_ms:
        s = replace(s, state=Completed())
        events.append(StateChanged(state=s.state))
        events.append(SessionCompleted())
    return s, events


def apply_command(s: Session, cmd: Command, now_ms: int) -> tuple[Session, list[Event]]:
    """Apply a researcher command at wall time now_ms.

    Raises CommandError with code invalid_transition, seek_out_of_range,
    inject_in_past, inject_out_of_range or duplicate_cue_id.
    """
    match cmd:
        case Start():
            if not isinstance(s.state, Loaded):
                raise CommandError("invalid_transition", f"cannot Start while {state_name(s.state)}")
            s = replace(s, state=Running(start_anchor_ms=now_ms))
            return s, [StateChanged(state=s.state)]

        case Pause():
            if not isinstance(s.state, Running):
                raise CommandError("invalid_transition", f"cannot Pause while {state_name(s.state)}")
            s = replace(s, state=Paused(position_ms=s.position_ms(now_ms)))
            return s, [StateChanged(state=s.state)]

        case Resume():
            if not isinstance(s.state, Paused):
                raise CommandError("invalid_transition", f"cannot Resume while {state_name(s.state)}")
            s = replace(s, state=Running(start_anchor_ms=now_ms - s.state.position_ms))
            return s, [StateChanged(state=s.state)]

        case Seek(to_ms=to):
            if not isinstance(s.state, (Running, Paused)):
                raise CommandError("invalid_transition", f"cannot Seek while {state_name(s.state)}")
            if not 0 <= to <= s.duration_ms:
                raise CommandError("seek_out_of_range", f"seek to {to} outside [0, {s.duration_ms}]")
            old = s.position_ms(now_ms)
            events: list[Event] = []
            if to > old:
                # Jumped-over cues are reported, not silently dropped.
                jumped = sorted(
                    (c for c in _pending(s) if old < c.at_ms <= to),
                    key=lambda c: (c.at_ms, c.id),
                )
                if jumped:
                    s = replace(s, skipped=s.skipped | {c.id for c in jumped})
                    events.extend(CueSkipped(cue_id=c.id) for c in jumped)
            if isinstance(s.state, Running):
                s = replace(s, state=Running(start_anchor_ms=now_ms - to))
            else:
                s = replace(s, state=Paused(position_ms=to))
            events.append(StateChanged(state=s.state))
            return s, events

        case Stop():
            if isinstance(s.state, Completed):
                return s, []
            s = replace(s, state=Completed())
            return s, [StateChanged(state=s.state), SessionCompleted()]

        case InjectCue(cue=cue):
            if isinstance(s.state, Completed):
                raise CommandError("invalid_transition", "cannot InjectCue while completed")
            position = s.position_ms(now_ms)
            if cue.at_ms < position:
                raise CommandError("inject_in_past", f"at_ms {cue.at_ms} < position {position}")
            if cue.at_ms > s.duration_ms:
                raise CommandError("inject_out_of_range", f"at_ms {cue.at_ms} > media end {s.duration_ms}")
            if any(c.id == cue.id for c in s.all_cues()):
                raise CommandError("duplicate_cue_id", f"cue id {cue.id!r} already exists")
            cue = replace(
                cue,
                anchor=canonical_direction(cue.anchor),
                target=None if cue.target is None else canonical_direction(cue.target),
            )
            s = replace(s, injected=s.injected + (cue,))
            return s, []

    raise CommandError("invalid_transition", f"unknown command {cmd!r}")


# --- biometric rules ------------------------------------------------------


@dataclass(frozen=True)
class BiometricRule:
    """Fire ``action`` after ``metric`` has satisfied the comparison for
    sustain_ms; re-arm only after it has been false for sustain_ms."""

    metric: str = "pulse_bpm"
    comparator: str = "greater"  # or "less"
    threshold: float = 0.0
    sustain_ms: int = 0
    action: Command = field(default_factory=Pause)

    def holds(self, value: float) -> bool:
        if self.comparator == "greater":
            return value > self.threshold
        if self.comparator == "less":
            return value < self.threshold
        raise ValueError(f"unknown comparator {self.comparator!r}")


class BiometricEngine:
    """Incremental evaluator with hysteresis, one armed/run state per rule.

    The condition is treated as piecewise-constant between samples: a
    run starts at the first sample where the condition's truth value
    changes and its length is measured sample-time to sample-time.
    """

    def __init__(self, rules):
        self.rules = list(rules)
        self._armed = [True] * len(self.rules)
        self._run_value: list[bool | None] = [None] * len(self.rules)
        self._run_start = [0] * len(self.rules)

    def push(self, t_ms: int, value: float) -> list[Command]:
        fired: list[Command] = []
        for i, rule in enumerate(self.rules):
            holds = rule.holds(value)
            if self._run_value[i] is not holds:
                self._run_value[i] = holds
                self._run_start[i] = t_ms
            run_ms = t_ms - self._run_start[i]
            if self._armed[i]:
                if holds and run_ms >= rule.sustain_ms:
                    fired.append(rule.action)
                    self._armed[i] = False
            else:
                if not holds and run_ms >= rule.sustain_ms:
                    self._armed[i] = True
        return fired


def biometric_firings(rules, history) -> list[tuple[int, Command]]:
    """(t_ms, action) for each rule firing over a sorted sample history."""
    engine = BiometricEngine(rules)
    out: list[tuple[int, Command]] = []
    for t_ms, value in history:
        out.extend((t_ms, cmd) for cmd in engine.push(t_ms, value))
    return out


def eval_biometric(rules, history) -> list[Command]:
    """Commands emitted by the rules over the full history, in time order."""
    return [cmd for _t, cmd in biometric_firings(rules, history)]
