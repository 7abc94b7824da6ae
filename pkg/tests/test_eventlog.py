"""Session log writing, replay, and the analysis report."""

from __future__ import annotations

import json

import pytest

from conftest import make_config, make_cue
from study360 import gaze
from study360 import protocol as proto
from study360.config import Direction
from study360.eventlog import (
    LogRecord,
    LogWriter,
    analyze,
    load_aois,
    read_log,
    replay_trace,
    report_to_json,
)
from study360.harness import run_virtual
from study360.simulator import SeekCues, SimConfig


def q_at(yaw, pitch=0.0):
    return gaze.direction_to_quat(Direction(yaw, pitch))


def rec_pose(t, yaw, pitch=0.0, direction="in"):
    return LogRecord(t, direction, "headset", proto.Pose(t_ms=t, q=q_at(yaw, pitch)))


def write_log(path, records):
    with LogWriter(path) as log:
        for r in records:
            log.append(r)


# --- writer / reader -------------------------------------------------------------


def test_log_round_trips_records(tmp_path):
    path = tmp_path / "s.jsonl"
    records = [
        LogRecord(0, "in", "researcher", proto.Hello(role="researcher")),
        rec_pose(100, 20.0),
        LogRecord(
            150, "out", "researcher",
            proto.CueMsg(cue=make_cue("c", at_ms=100), position_ms=150),
        ),
        LogRecord(200, "out", "observer", proto.State(state="running", position_ms=200)),
    ]
    write_log(path, records)
    got, skipped = read_log(path)
    assert skipped == 0
    assert got == records


def test_writer_appends_across_reopens(tmp_path):
    path = tmp_path / "s.jsonl"
    write_log(path, [rec_pose(0, 0.0)])
    write_log(path, [rec_pose(10, 1.0)])
    got, _ = read_log(path)
    assert [r.t_recv_ms for r in got] == [0, 10]


def test_corrupt_lines_are_skipped_not_salvaged(tmp_path):
    path = tmp_path / "s.jsonl"
    write_log(path, [rec_pose(0, 0.0), rec_pose(100, 5.0)])
    with open(path, "a", encoding="utf-8") as f:
        f.write("{half a rec\n")
        f.write('{"t_recv_ms":1,"direction":"in","peer_role":"headset"}\n')  # no msg
        f.write('{"t_recv_ms":2,"direction":"sideways","peer_role":"x","msg":{"type":"ping","t0_ms":1,"v":1}}\n')
        f.write("\n")  # blank lines are not records at all
    write_log(path, [rec_pose(200, 9.0)])
    got, skipped = read_log(path)
    assert skipped == 3
    assert [r.t_recv_ms for r in got] == [0, 100, 200]


def test_truncated_final_line_loses_only_itself(tmp_path):
    path = tmp_path / "s.jsonl"
    write_log(path, [rec_pose(0, 0.0), rec_pose(100, 5.0)])
    blob = path.read_bytes()
    path.write_bytes(blob[:-10])  # chop mid-record, as a crash would
    got, skipped = read_log(path)
    assert skipped == 1
    assert [r.t_recv_ms for r in got] == [0]


# --- replay ------------------------------------------------------------------------


def test_replay_orders_trace_and_drops_duplicate_timestamps(tmp_path):
    path = tmp_path / "s.jsonl"
    write_log(
        path,
        [
            rec_pose(200, 2.0),
            rec_pose(0, 0.0),
            rec_pose(100, 1.0),
            rec_pose(100, 99.0),  # duplicate: first sample at t=100 wins
        ],
    )
    replay = replay_trace(path)
    assert [t for t, _ in replay.trace] == [0, 100, 200]
    assert replay.duplicate_pose_timestamps == 1
    yaw_at_100 = gaze.quat_to_direction(replay.trace[1][1]).yaw_deg
    assert yaw_at_100 == pytest.approx(1.0, abs=1e-9)


def test_replay_ignores_mirrored_pose_copies(tmp_path):
    path = tmp_path / "s.jsonl"
    write_log(
        path,
        [
            rec_pose(0, 0.0, direction="in"),
            rec_pose(0, 0.0, direction="out"),  # broadcast copy to researcher
            rec_pose(0, 0.0, direction="out"),  # ... and to an observer
        ],
    )
    replay = replay_trace(path)
    assert len(replay.trace) == 1
    assert replay.duplicate_pose_timestamps == 0


def test_replay_collapses_cue_broadcasts_and_collects_the_rest(tmp_path):
    path = tmp_path / "s.jsonl"
    cue = make_cue("c", at_ms=100)
    cue_rec = lambda role: LogRecord(
        150, "out", role, proto.CueMsg(cue=cue, position_ms=150)
    )
    write_log(
        path,
        [
            cue_rec("headset"),
            cue_rec("researcher"),
            LogRecord(0, "in", "headset", proto.Biometric(t_ms=0, pulse_bpm=88.0)),
            LogRecord(
                300, "out", "researcher",
                proto.State(state="running", position_ms=300, skipped=("x", "y")),
            ),
            LogRecord(
                400, "out", "headset",
                proto.State(state="running", position_ms=400, skipped=("x",)),
            ),
            LogRecord(
                500, "out", "researcher",
                proto.State(state="completed", position_ms=500),
            ),
        ],
    )
    replay = replay_trace(path)
    assert [(c.id, pos) for c, pos in replay.fired] == [("c", 150)]
    assert replay.skipped_ids == ["x", "y"]
    assert replay.biometrics == [(0, 88.0)]
    assert replay.final_state == "completed"


# --- aoi file ------------------------------------------------------------------------


def test_load_aois(tmp_path):
    path = tmp_path / "aois.json"
    path.write_text(
        json.dumps(
            [
                {
                    "id": "poster",
                    "center": {"yaw_deg": 90, "pitch_deg": 10},
                    "yaw_width_deg": 40,
                    "pitch_height_deg": 20,
                },
                {"id": "origin", "yaw_width_deg": 10, "pitch_height_deg": 10},
            ]
        )
    )
    a, b = load_aois(path)
    assert a == gaze.Aoi("poster", Direction(90.0, 10.0), 40.0, 20.0)
    assert b.center == Direction(0.0, 0.0)  # center defaults to straight ahead


# --- analyze -------------------------------------------------------------------------


@pytest.fixture
def fixed_log(tmp_path):
    """Gaze parked at the front for 1 s, then right for 1 s; one cue."""
    path = tmp_path / "s.jsonl"
    records = [rec_pose(t, 0.0) for t in range(0, 1000, 100)]
    records += [rec_pose(t, 90.0) for t in range(1000, 2001, 100)]
    records.append(
        LogRecord(
            200, "out", "headset",
            proto.CueMsg(cue=make_cue("front-note", at_ms=200, duration_ms=300),
                         position_ms=200),
        )
    )
    records.append(
        LogRecord(2000, "out", "researcher",
                  proto.State(state="completed", position_ms=2000)),
    )
    write_log(path, records)
    return path


def test_analyze_report_matches_direct_computation(fixed_log):
    aois = [gaze.Aoi("right", Direction(90.0, 0.0), 30.0, 30.0)]
    report = analyze(fixed_log, aois=aois, grid_cols=4, grid_rows=2)

    replay = replay_trace(fixed_log)
    grid = gaze.heatmap(replay.trace, 4, 2)
    assert report["trace"] == {
        "samples": 21,
        "duration_ms": 2000,
        "corrupt_lines": 0,
        "duplicate_pose_timestamps": 0,
    }
    assert report["heatmap"]["total"] == 21
    assert report["heatmap"]["max_bin"] == grid.max_count()
    assert report["heatmap"]["entropy_bits"] == gaze.heatmap_entropy_bits(grid)
    assert report["dwell_times_ms"] == gaze.dwell_times(replay.trace, aois)
    assert report["dwell_times_ms"]["right"] == 1000  # 1000..2000, last sample free
    (cue, _) = replay.fired[0]
    assert report["cue_visibility_ms"]["front-note"] == gaze.cue_visibility(
        replay.trace, cue, 45.0
    )
    assert report["cue_visibility_ms"]["front-note"] == 300  # fully watched
    assert report["timeline"] == {
        "fired": [{"id": "front-note", "at_ms": 200, "position_ms": 200}],
        "skipped": [],
        "final_state": "completed",
    }
    assert "biometrics" not in report


def test_analyze_empty_log(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    report = analyze(path)
    assert report["trace"]["samples"] == 0
    assert report["heatmap"]["total"] == 0
    assert report["heatmap"]["entropy_bits"] == 0.0
    assert report["cue_visibility_ms"] == {}


def test_analyze_includes_biometrics_when_present(tmp_path):
    path = tmp_path / "s.jsonl"
    write_log(
        path,
        [
            LogRecord(t, "in", "headset", proto.Biometric(t_ms=t, pulse_bpm=bpm))
            for t, bpm in [(0, 80.0), (1000, 90.0), (2000, 100.0)]
        ],
    )
    report = analyze(path)
    assert report["biometrics"] == {
        "samples": 3,
        "mean_pulse_bpm": 90.0,
        "max_pulse_bpm": 100.0,
    }


def test_report_serialization_is_stable_bytes(fixed_log):
    a = report_to_json(analyze(fixed_log))
    b = report_to_json(analyze(fixed_log))
    assert a == b
    assert json.loads(a)["parameters"]["grid_cols"] == 8


def test_analyze_replayed_virtual_run(tmp_path):
    cfg = make_config(
        cues=[make_cue("look", at_ms=1000, kind="arrow")], duration_ms=4000
    )
    sim_cfg = SimConfig(
        behavior=SeekCues(max_speed_deg_per_s=90.0, half_fov_deg=45.0),
        pose_rate_hz=30,
    )
    result = run_virtual(cfg, sim_cfg, tmp_path / "log.jsonl")
    report = analyze(result.log_path)
    assert report["timeline"]["final_state"] == "completed"
    assert report["timeline"]["fired"] == [
        {"id": "look", "at_ms": 1000, "position_ms": 1000}
    ]
    assert report["trace"]["samples"] == result.report.poses_sent
    assert report["trace"]["corrupt_lines"] == 0
    # the seeker reaches the cue target, so some visibility accrues
    assert report["cue_visibility_ms"]["look"] > 0
