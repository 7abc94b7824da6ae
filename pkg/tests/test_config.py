import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from study360.config import (
    Direction,
    FRONT,
    ParseError,
    StudyConfig,
    canonicalize,
    parse_study,
    serialize_study,
    validate_study,
    wrap_deg,
)

from conftest import MINIMAL_DOC, make_config, make_cue, make_media, study_configs


def doc_bytes(doc) -> bytes:
    return json.dumps(doc).encode("utf-8")


# --- parse ------------------------------------------------------------------


def test_parse_minimal_document():
    cfg = parse_study(doc_bytes(MINIMAL_DOC))
    assert cfg.version == 1
    assert cfg.session_label == "s"
    assert cfg.media.duration_ms == 60000
    assert len(cfg.cues) == 1
    cue = cfg.cues[0]
    assert cue.id == "a" and cue.at_ms == 1000 and cue.body == "hello"
    assert cue.anchor == FRONT  # default applied
    assert cfg.audio_tracks == ()


def test_parse_defaults_gain_and_mode():
    doc = dict(MINIMAL_DOC)
    doc["audio_tracks"] = [{"id": "amb", "url": "amb.ogg", "start_ms": 0}]
    cfg = parse_study(doc_bytes(doc))
    track = cfg.audio_tracks[0]
    assert track.gain == 1.0
    assert track.mode == "mono"
    assert track.anchor is None


def test_parse_spatial_track_requires_anchor():
    doc = dict(MINIMAL_DOC)
    doc["audio_tracks"] = [
        {"id": "amb", "url": "amb.ogg", "start_ms": 0, "mode": "spatial"}
    ]
    with pytest.raises(ParseError) as exc:
        parse_study(doc_bytes(doc))
    assert exc.value.code == "missing_field"
    assert exc.value.field == "audio_tracks[0].anchor"


def test_parse_missing_version():
    doc = {k: v for k, v in MINIMAL_DOC.items() if k != "version"}
    with pytest.raises(ParseError) as exc:
        parse_study(doc_bytes(doc))
    assert exc.value.code == "missing_field"
    assert exc.value.field == "version"


def test_parse_wrong_type_reports_dotted_path():
    doc = json.loads(json.dumps(MINIMAL_DOC))
    doc["media"]["duration_ms"] = "60000"
    with pytest.raises(ParseError) as exc:
        parse_study(doc_bytes(doc))
    assert exc.value.code == "wrong_type"
    assert exc.value.field == "media.duration_ms"


def test_parse_malformed_json():
    with pytest.raises(ParseError) as exc:
        parse_study(b"{not json")
    assert exc.value.code == "malformed_json"


def test_parse_is_shape_only():
    # Negative at_ms parses fine; it is validate_study's business.
    doc = json.loads(json.dumps(MINIMAL_DOC))
    doc["cues"][0]["at_ms"] = -5
    cfg = parse_study(doc_bytes(doc))
    assert cfg.cues[0].at_ms == -5
    assert any(v.code == "cue_before_start" for v in validate_study(cfg))


def test_parse_ignores_unknown_keys():
    doc = json.loads(json.dumps(MINIMAL_DOC))
    doc["future_flag"] = True
    doc["cues"][0]["color"] = "red"
    cfg = parse_study(doc_bytes(doc))
    assert cfg.cues[0].id == "a"


def test_parse_rejects_bool_as_int():
    doc = json.loads(json.dumps(MINIMAL_DOC))
    doc["cues"][0]["at_ms"] = True
    with pytest.raises(ParseError) as exc:
        parse_study(doc_bytes(doc))
    assert exc.value.code == "wrong_type"


# --- validate ---------------------------------------------------------------


def test_validate_minimal_is_clean():
    assert validate_study(parse_study(doc_bytes(MINIMAL_DOC))) == []


def test_validate_cue_after_media_end():
    cfg = make_config(cues=[make_cue("a", at_ms=70000)])
    violations = validate_study(cfg)
    assert [v.code for v in violations] == ["cue_after_media_end"]
    assert violations[0].subject == "a"


def test_validate_duplicate_cue_id():
    cfg = make_config(cues=[make_cue("a", 1000), make_cue("a", 2000)])
    assert "duplicate_cue_id" in [v.code for v in validate_study(cfg)]


def test_validate_reports_all_problems_not_first():
    cfg = make_config(
        cues=[
            make_cue("a", at_ms=-1),
            make_cue("b", kind="text", body=""),
        ]
    )
    codes = {v.code for v in validate_study(cfg)}
    assert {"cue_before_start", "empty_text_body"} <= codes


def test_validate_gain_out_of_range():
    doc = json.loads(json.dumps(MINIMAL_DOC))
    doc["audio_tracks"] = [{"id": "x", "url": "x.ogg", "start_ms": 0, "gain": 1.5}]
    cfg = parse_study(doc_bytes(doc))
    assert "gain_out_of_range" in [v.code for v in validate_study(cfg)]


def raw_config(*cues) -> StudyConfig:
    # no canonicalization: validate_study runs pre-wrap by contract
    return StudyConfig(version=1, session_label="s", media=make_media(), cues=tuple(cues))


def test_validate_yaw_beyond_one_wrap():
    cfg = raw_config(make_cue("a", anchor=Direction(yaw_deg=550.0)))
    assert "yaw_out_of_range" in [v.code for v in validate_study(cfg)]


def test_validate_yaw_within_one_wrap_is_fine():
    cfg = raw_config(make_cue("a", anchor=Direction(yaw_deg=190.0)))
    assert validate_study(cfg) == []


# --- canonicalize -----------------------------------------------------------


def test_canonicalize_sorts_by_at_then_id():
    cues = [make_cue("b", 2000), make_cue("a", 1000)]
    cfg = make_config(cues=cues)
    assert [c.id for c in cfg.cues] == ["a", "b"]
    # same at_ms: id is the tie-break
    cfg = make_config(cues=[make_cue("b", 1000), make_cue("a", 1000)])
    assert [c.id for c in cfg.cues] == ["a", "b"]


def test_canonicalize_wraps_yaw():
    cfg = make_config(cues=[make_cue("a", anchor=Direction(yaw_deg=190.0))])
    assert cfg.cues[0].anchor.yaw_deg == -170.0


@given(study_configs())
def test_canonicalize_idempotent(cfg):
    assert canonicalize(cfg) == cfg  # builder already canonicalized


@given(study_configs())
def test_canonicalize_preserves_ids_and_times(cfg):
    recanon = canonicalize(cfg)
    assert sorted(c.id for c in recanon.cues) == sorted(c.id for c in cfg.cues)
    assert sorted(c.at_ms for c in recanon.cues) == sorted(c.at_ms for c in cfg.cues)


@given(study_configs())
def test_validate_clean_after_canonicalize(cfg):
    assert validate_study(cfg) == []


# --- round trip -------------------------------------------------------------


@given(study_configs())
def test_serialize_parse_round_trip(cfg):
    again = parse_study(serialize_study(cfg).encode("utf-8"))
    assert again == cfg


@given(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False))
def test_wrap_deg_range(x):
    w = wrap_deg(x)
    assert -180.0 <= w < 180.0
    # same angle modulo 360
    assert abs((x - w) % 360.0) < 1e-6 or abs((x - w) % 360.0 - 360.0) < 1e-6
