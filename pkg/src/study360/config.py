"""Study configuration: the declarative file that drives a session.

A study file is UTF-8 JSON with this shape::

    {
      "version": 1,
      "session_label": "pilot-01",
      "media": {"url": "v.mp4", "duration_ms": 60000,
                "projection": "equirectangular",
                "width_px": 3840, "height_px": 1920},
      "audio_tracks": [
        {"id": "amb", "url": "amb.ogg", "start_ms": 0,
         "gain": 0.8, "mode": "mono"}
      ],
      "cues": [
        {"id": "a", "at_ms": 1000, "duration_ms": 3000,
         "kind": "text", "body": "hello",
         "anchor": {"yaw_deg": 0, "pitch_deg": 0}}
      ]
    }

Parsing is shape-only (required keys, correct types, defaults applied);
semantic checks live in :func:`validate_study`, which returns the full
list of violations instead of aborting at the first one.  Unknown keys
are ignored for forward compatibility.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace


def wrap_deg(x: float) -> float:
    """Wrap an angle in degrees into [-180, 180)."""
    return ((x + 180.0) % 360.0) - 180.0


@dataclass(frozen=True)
class Direction:
    """Spherical anchor: yaw in [-180, 180), pitch in [-90, 90], degrees."""

    yaw_deg: float = 0.0
    pitch_deg: float = 0.0


FRONT = Direction(0.0, 0.0)

CUE_KINDS = ("text", "arrow", "haptic")
AUDIO_MODES = ("mono", "spatial")


@dataclass(frozen=True)
class MediaRef:
    url: str
    duration_ms: int
    projection: str = "equirectangular"
    width_px: int = 3840
    height_px: int = 1920


@dataclass(frozen=True)
class AudioTrack:
    id: str
    url: str
    start_ms: int
    gain: float = 1.0
    mode: str = "mono"
    anchor: Direction | None = None  # required iff mode == "spatial"


@dataclass(frozen=True)
class Cue:
    """A timed stimulus: text to display, or an arrow/haptic directive.

    ``body`` is set for text cues, ``target`` for arrow and haptic cues.
    ``anchor`` is where the stimulus is placed in the sphere; the default
    (0, 0) is the front-and-centre position of the play space.
    """

    id: str
    at_ms: int
    duration_ms: int
    kind: str
    body: str | None = None
    target: Direction | None = None
    anchor: Direction = FRONT


@dataclass(frozen=True)
class StudyConfig:
    version: int
    session_label: str
    media: MediaRef
    audio_tracks: tuple[AudioTrack, ...] = ()
    cues: tuple[Cue, ...] = ()


class ParseError(Exception):
    """Shape error in a study document.

    ``code`` is one of ``malformed_json``, ``missing_field``,
    ``wrong_type``; ``field`` is the dotted path of the offending key.
    """

    def __init__(self, code: str, field_path: str | None = None, message: str | None = None):
        self.code = code
        self.field = field_path
        super().__init__(message or (f"{code}: {field_path}" if field_path else code))


@dataclass(frozen=True)
class Violation:
    """One semantic problem found by validate_study; violations are values."""

    code: str
    subject: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}({self.subject}): {self.message}"


_MISSING = object()


def _get(obj: dict, key: str, path: str, kind, *, default=_MISSING):
    if not isinstance(obj, dict):
        raise ParseError("wrong_type", path.rsplit(".", 1)[0] or path, f"{path}: expected object")
    if key not in obj:
        if default is not _MISSING:
            return default
        raise ParseError("missing_field", path)
    value = obj[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParseError("wrong_type", path)
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ParseError("wrong_type", path)
        return value
    if not isinstance(value, kind):
        raise ParseError("wrong_type", path)
    return value


def _parse_direction(obj, path: str) -> Direction:
    if not isinstance(obj, dict):
        raise ParseError("wrong_type", path)
    return Direction(
        yaw_deg=_get(obj, "yaw_deg", f"{path}.yaw_deg", float, default=0.0),
        pitch_deg=_get(obj, "pitch_deg", f"{path}.pitch_deg", float, default=0.0),
    )


def _parse_cue(obj, path: str) -> Cue:
    kind = _get(obj, "kind", f"{path}.kind", str)
    if kind not in CUE_KINDS:
        raise ParseError("wrong_type", f"{path}.kind", f"unknown cue kind {kind!r}")
    body = None
    target = None
    if kind == "text":
        body = _get(obj, "body", f"{path}.body", str)
    else:
        target = _parse_direction(_get(obj, "target", f"{path}.target", dict), f"{path}.target")
    anchor = FRONT
    if "anchor" in obj:
        anchor = _parse_direction(obj["anchor"], f"{path}.anchor")
    return Cue(
        id=_get(obj, "id", f"{path}.id", str),
        at_ms=_get(obj, "at_ms", f"{path}.at_ms", int),
        duration_ms=_get(obj, "duration_ms", f"{path}.duration_ms", int),
        kind=kind,
        body=body,
        target=target,
        anchor=anchor,
    )


def _parse_audio(obj, path: str) -> AudioTrack:
    mode = _get(obj, "mode", f"{path}.mode", str, default="mono")
    if mode not in AUDIO_MODES:
        raise ParseError("wrong_type", f"{path}.mode", f"unknown audio mode {mode!r}")
    anchor = None
    if mode == "spatial":
        anchor = _parse_direction(_get(obj, "anchor", f"{path}.anchor", dict), f"{path}.anchor")
    return AudioTrack(
        id=_get(obj, "id", f"{path}.id", str),
        url=_get(obj, "url", f"{path}.url", str),
        start_ms=_get(obj, "start_ms", f"{path}.start_ms", int),
        gain=_get(obj, "gain", f"{path}.gain", float, default=1.0),
        mode=mode,
        anchor=anchor,
    )


def parse_study(text: str | bytes) -> StudyConfig:
    """Parse a study document; shape checks only, see validate_study."""
    try:
        doc = json.loads(text)
    except (ValueError, UnicodeDecodeError) as exc:
        raise ParseError("malformed_json", None, str(exc)) from exc
    if not isinstance(doc, dict):
        raise ParseError("malformed_json", None, "top level is not an object")
    media_obj = _get(doc, "media", "media", dict)
    media = MediaRef(
        url=_get(media_obj, "url", "media.url", str),
        duration_ms=_get(media_obj, "duration_ms", "media.duration_ms", int),
        projection=_get(media_obj, "projection", "media.projection", str),
        width_px=_get(media_obj, "width_px", "media.width_px", int),
        height_px=_get(media_obj, "height_px", "media.height_px", int),
    )
    tracks = _get(doc, "audio_tracks", "audio_tracks", list, default=[])
    cues = _get(doc, "cues", "cues", list, default=[])
    return StudyConfig(
        version=_get(doc, "version", "version", int),
        session_label=_get(doc, "session_label", "session_label", str),
        media=media,
        audio_tracks=tuple(_parse_audio(t, f"audio_tracks[{i}]") for i, t in enumerate(tracks)),
        cues=tuple(_parse_cue(c, f"cues[{i}]") for i, c in enumerate(cues)),
    )


def _check_direction(d: Direction, subject: str, out: list[Violation]) -> None:
    # One wrap of slack: canonicalize can fix anything in [-540, 540).
    if not -540.0 <= d.yaw_deg < 540.0:
        out.append(Violation("yaw_out_of_range", subject, f"yaw {d.yaw_deg} beyond one wrap"))
    if not -90.0 <= d.pitch_deg <= 90.0:
        out.append(Violation("pitch_out_of_range", subject, f"pitch {d.pitch_deg} outside [-90, 90]"))


def validate_study(cfg: StudyConfig) -> list[Violation]:
    """Return every semantic violation in cfg; an empty list means valid."""
    out: list[Violation] = []
    if cfg.version != 1:
        out.append(Violation("unsupported_version", "version", f"version {cfg.version}, expected 1"))
    m = cfg.media
    if m.projection != "equirectangular":
        out.append(Violation("bad_projection", "media.projection", f"unsupported projection {m.projection!r}"))
    if m.duration_ms < 0:
        out.append(Violation("negative_duration", "media.duration_ms", f"duration {m.duration_ms} < 0"))
    if m.width_px <= 0 or m.height_px <= 0:
        out.append(Violation("nonpositive_dimension", "media", f"{m.width_px}x{m.height_px}"))
    elif m.width_px % 2 != 0:
        out.append(Violation("odd_width", "media.width_px", f"width {m.width_px} is odd"))

    seen: set[str] = set()
    for cue in cfg.cues:
        if cue.id in seen:
            out.append(Violation("duplicate_cue_id", cue.id, "cue id used more than once"))
        seen.add(cue.id)
        if cue.at_ms < 0:
            out.append(Violation("cue_before_start", cue.id, f"at_ms {cue.at_ms} < 0"))
        elif cue.at_ms > m.duration_ms:
            out.append(Violation("cue_after_media_end", cue.id, f"at_ms {cue.at_ms} > {m.duration_ms}"))
        if cue.duration_ms <= 0:
            out.append(Violation("nonpositive_cue_duration", cue.id, f"duration_ms {cue.duration_ms}"))
        if cue.kind == "text" and not cue.body:
            out.append(Violation("empty_text_body", cue.id, "text cue with empty body"))
        _check_direction(cue.anchor, f"cue {cue.id} anchor", out)
        if cue.target is not None:
            _check_direction(cue.target, f"cue {cue.id} target", out)

    seen_audio: set[str] = set()
    for track in cfg.audio_tracks:
        if track.id in seen_audio:
            out.append(Violation("duplicate_audio_id", track.id, "audio id used more than once"))
        seen_audio.add(track.id)
        if track.start_ms < 0:
            out.append(Violation("audio_before_start", track.id, f"start_ms {track.start_ms} < 0"))
        elif track.start_ms > m.duration_ms:
            out.append(Violation("audio_after_media_end", track.id, f"start_ms {track.start_ms} > {m.duration_ms}"))
        if not 0.0 <= track.gain <= 1.0:
            out.append(Violation("gain_out_of_range", track.id, f"gain {track.gain} outside [0, 1]"))
        if track.anchor is not None:
            _check_direction(track.anchor, f"audio {track.id} anchor", out)
    return out


def canonical_direction(d: Direction) -> Direction:
    yaw = wrap_deg(d.yaw_deg)
    if yaw == d.yaw_deg:
        return d
    return replace(d, yaw_deg=yaw)


def canonicalize(cfg: StudyConfig) -> StudyConfig:
    """Sort cues by (at_ms, id) and wrap all yaws into [-180, 180).

    Idempotent; the (at_ms, id) order is the scheduler's total order, so
    two cues at the same instant always fire in id order.
    """
    cues = tuple(
        sorted(
            (
                replace(
                    c,
                    anchor=canonical_direction(c.anchor),
                    target=None if c.target is None else canonical_direction(c.target),
                )
                for c in cfg.cues
            ),
            key=lambda c: (c.at_ms, c.id),
        )
    )
    tracks = tuple(
        t if t.anchor is None else replace(t, anchor=canonical_direction(t.anchor))
        for t in cfg.audio_tracks
    )
    return replace(cfg, cues=cues, audio_tracks=tracks)


def direction_to_json(d: Direction) -> dict:
    return {"yaw_deg": d.yaw_deg, "pitch_deg": d.pitch_deg}


def cue_to_json(c: Cue) -> dict:
    out: dict = {"id": c.id, "at_ms": c.at_ms, "duration_ms": c.duration_ms, "kind": c.kind}
    if c.kind == "text":
        out["body"] = c.body
    else:
        out["target"] = direction_to_json(c.target or FRONT)
    out["anchor"] = direction_to_json(c.anchor)
    return out


def cue_from_json(obj: dict, path: str = "cue") -> Cue:
    return _parse_cue(obj, path)


def study_to_json(cfg: StudyConfig) -> dict:
    audio = []
    for t in cfg.audio_tracks:
        entry = {"id": t.id, "url": t.url, "start_ms": t.start_ms, "gain": t.gain, "mode": t.mode}
        if t.anchor is not None:
            entry["anchor"] = direction_to_json(t.anchor)
        audio.append(entry)
    return {
        "version": cfg.version,
        "session_label": cfg.session_label,
        "media": {
            "url": cfg.media.url,
            "duration_ms": cfg.media.duration_ms,
            "projection": cfg.media.projection,
            "width_px": cfg.media.width_px,
            "height_px": cfg.media.height_px,
        },
        "audio_tracks": audio,
        "cues": [cue_to_json(c) for c in cfg.cues],
    }


def serialize_study(cfg: StudyConfig) -> str:
    """Serialize with every field written out, defaults included."""
    return json.dumps(study_to_json(cfg), indent=2, sort_keys=False)


def load_study(path) -> StudyConfig:
    with open(path, "rb") as f:
        return parse_study(f.read())
