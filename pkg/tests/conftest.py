"""Shared builders and hypothesis strategies for the suite."""

from __future__ import annotations

import math

from hypothesis import strategies as st

from study360.config import (
    AudioTrack,
    Cue,
    Direction,
    MediaRef,
    StudyConfig,
    canonicalize,
)

# --- plain builders ---------------------------------------------------------


def make_media(duration_ms: int = 60000, **kw) -> MediaRef:
    return MediaRef(url=kw.pop("url", "video.mp4"), duration_ms=duration_ms, **kw)


def make_cue(cue_id: str = "a", at_ms: int = 1000, **kw) -> Cue:
    kw.setdefault("duration_ms", 3000)
    kw.setdefault("kind", "text")
    if kw["kind"] == "text":
        kw.setdefault("body", "hello")
    else:
        kw.setdefault("target", Direction(90.0, 0.0))
    return Cue(id=cue_id, at_ms=at_ms, **kw)


def make_config(cues=(), audio=(), duration_ms: int = 60000) -> StudyConfig:
    return canonicalize(
        StudyConfig(
            version=1,
            session_label="test-session",
            media=make_media(duration_ms),
            audio_tracks=tuple(audio),
            cues=tuple(cues),
        )
    )


MINIMAL_DOC = {
    "version": 1,
    "session_label": "s",
    "media": {
        "url": "v.mp4",
        "duration_ms": 60000,
        "projection": "equirectangular",
        "width_px": 3840,
        "height_px": 1920,
    },
    "audio_tracks": [],
    "cues": [
        {"id": "a", "at_ms": 1000, "duration_ms": 3000, "kind": "text", "body": "hello"}
    ],
}


# --- hypothesis strategies --------------------------------------------------

yaw_degs = st.floats(min_value=-180.0, max_value=180.0, exclude_max=True, allow_nan=False)
pitch_degs = st.floats(min_value=-90.0, max_value=90.0, allow_nan=False)

directions = st.builds(Direction, yaw_deg=yaw_degs, pitch_deg=pitch_degs)

# Off-pole directions where yaw is numerically meaningful.
open_directions = st.builds(
    Direction,
    yaw_deg=yaw_degs,
    pitch_deg=st.floats(min_value=-89.0, max_value=89.0, allow_nan=False),
)

cue_ids = st.text(alphabet="abcdefghijklmnopqrstuvwxyz0123456789-", min_size=1, max_size=8)


@st.composite
def unit_quats(draw):
    """Uniform-ish unit quaternions (normalized 4-gaussian)."""
    comps = [
        draw(st.floats(min_value=-1.0, max_value=1.0, allow_nan=False))
        for _ in range(4)
    ]
    norm = math.sqrt(sum(c * c for c in comps))
    if norm < 1e-3:
        comps = [1.0, 0.0, 0.0, 0.0]
        norm = 1.0
    return tuple(c / norm for c in comps)


@st.composite
def cues_for(draw, duration_ms: int, ids: list[str]):
    out = []
    for cue_id in ids:
        kind = draw(st.sampled_from(("text", "arrow", "haptic")))
        cue = Cue(
            id=cue_id,
            at_ms=draw(st.integers(min_value=0, max_value=duration_ms)),
            duration_ms=draw(st.integers(min_value=1, max_value=10000)),
            kind=kind,
            body="hello" if kind == "text" else None,
            target=None if kind == "text" else draw(directions),
            anchor=draw(directions),
        )
        out.append(cue)
    return out


@st.composite
def study_configs(draw, max_cues: int = 8):
    duration = draw(st.integers(min_value=1000, max_value=120000))
    ids = draw(
        st.lists(cue_ids, min_size=0, max_size=max_cues, unique=True)
    )
    cues = draw(cues_for(duration, ids))
    return canonicalize(
        StudyConfig(
            version=1,
            session_label=draw(st.text(min_size=1, max_size=12)),
            media=make_media(duration),
            cues=tuple(cues),
        )
    )
