"""Append-only JSONL session log and its replay/analysis readers.

One record per line, flushed per record, so a log truncated at any
byte boundary loses at most its final record.  Every message the
server sends or receives lands here exactly once per peer, which
makes the log a complete replayable account of the session.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from . import gaze, protocol as proto
from .config import Cue, Direction


@dataclass(frozen=True)
class LogRecord:
    t_recv_ms: int
    direction: str  # "in" | "out"
    peer_role: str
    msg: proto.Message

    def to_json_line(self) -> str:
        return json.dumps(
            {
                "t_recv_ms": self.t_recv_ms,
                "direction": self.direction,
                "peer_role": self.peer_role,
                "msg": json.loads(proto.encode(self.msg)),
            },
            separators=(",", ":"),
        )


class LogWriter:
    """Appends LogRecords to a JSONL file, one flush per record."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._f = open(self.path, "a", encoding="utf-8")
        self.records_written = 0

    def append(self, record: LogRecord) -> None:
        self._f.write(record.to_json_line() + "\n")
        self._f.flush()
        self.records_written += 1

    def close(self) -> None:
        if not self._f.closed:
            self._f.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_log(path: str | Path) -> tuple[list[LogRecord], int]:
    """Read a JSONL log; corrupt lines are skipped and counted, never
    salvaged partially."""
    records: list[LogRecord] = []
    skipped = 0
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                msg = proto.decode(json.dumps(obj["msg"]))
                rec = LogRecord(
                    t_recv_ms=int(obj["t_recv_ms"]),
                    direction=str(obj["direction"]),
                    peer_role=str(obj["peer_role"]),
                    msg=msg,
                )
                if rec.direction not in ("in", "out"):
                    raise ValueError("bad direction")
                records.append(rec)
            except Exception:
                skipped += 1
    return records, skipped


@dataclass
class Replay:
    """What a session log contains, reorganized for analysis."""

    trace: list[tuple[int, tuple[float, float, float, float]]] = field(default_factory=list)
    fired: list[tuple[Cue, int | None]] = field(default_factory=list)  # (cue, fire position)
    skipped_ids: list[str] = field(default_factory=list)
    biometrics: list[tuple[int, float]] = field(default_factory=list)
    final_state: str | None = None
    corrupt_lines: int = 0
    duplicate_pose_timestamps: int = 0


def replay_trace(path: str | Path) -> Replay:
    """Rebuild the gaze trace, cue firings and biometric samples from a log.

    Pose samples are ordered by their own t_ms (stable on equal server
    receive order); a duplicated timestamp keeps the first sample so the
    trace stays strictly increasing.  Broadcast copies of the same cue
    message collapse to one firing.
    """
    records, corrupt = read_log(path)
    out = Replay(corrupt_lines=corrupt)
    samples: list[tuple[int, tuple[float, float, float, float]]] = []
    fired_seen: set[str] = set()
    skipped_seen: set[str] = set()
    for rec in records:
        match rec.msg:
            case proto.Pose(t_ms=t, q=q) if rec.direction == "in":
                samples.append((t, q))
            case proto.Biometric(t_ms=t, pulse_bpm=bpm) if rec.direction == "in":
                out.biometrics.append((t, bpm))
            case proto.CueMsg(cue=cue, position_ms=pos) if rec.direction == "out":
                if cue.id not in fired_seen:
                    fired_seen.add(cue.id)
                    out.fired.append((cue, pos))
            case proto.State(state=label, skipped=skipped) if rec.direction == "out":
                out.final_state = label
                for cue_id in skipped:
                    if cue_id not in skipped_seen:
                        skipped_seen.add(cue_id)
                        out.skipped_ids.append(cue_id)
            case proto.Welcome(state=label) if rec.direction == "out":
                out.final_state = label
            case _:
                pass
    samples.sort(key=lambda s: s[0])  # stable: ties keep arrival order
    last_t = None
    for t, q in samples:
        if last_t is not None and t <= last_t:
            out.duplicate_pose_timestamps += 1
            continue
        out.trace.append((t, q))
        last_t = t
    return out


def load_aois(path: str | Path) -> list[gaze.Aoi]:
    """AOI file: JSON list of {id, center:{yaw_deg,pitch_deg},
    yaw_width_deg, pitch_height_deg}."""
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    aois = []
    for item in doc:
        center = item.get("center", {})
        aois.append(
            gaze.Aoi(
                id=str(item["id"]),
                center=Direction(
                    float(center.get("yaw_deg", 0.0)), float(center.get("pitch_deg", 0.0))
                ),
                yaw_width_deg=float(item["yaw_width_deg"]),
                pitch_height_deg=float(item["pitch_height_deg"]),
            )
        )
    return aois


def analyze(
    log_path: str | Path,
    aois: list[gaze.Aoi] | None = None,
    grid_cols: int = 8,
    grid_rows: int = 4,
    half_fov_deg: float = 45.0,
) -> dict:
    """Pure function of (log, parameters) -> report dict.

    Numbers are exactly what the gaze module computes on the replayed
    trace.  Cue visibility windows use the cue's timeline at_ms, which
    matches trace time when the session started at server time 0 and
    was never paused or seeked; logs from steered sessions shift
    accordingly.
    """
    replay = replay_trace(log_path)
    trace = replay.trace
    grid = gaze.heatmap(trace, grid_cols, grid_rows)
    report: dict = {
        "trace": {
            "samples": len(trace),
            "duration_ms": (trace[-1][0] - trace[0][0]) if len(trace) >= 2 else 0,
            "corrupt_lines": replay.corrupt_lines,
            "duplicate_pose_timestamps": replay.duplicate_pose_timestamps,
        },
        "heatmap": {
            "cols": grid.cols,
            "rows": grid.rows,
            "max_bin": grid.max_count(),
            "total": grid.total(),
            "entropy_bits": gaze.heatmap_entropy_bits(grid),
        },
        "timeline": {
            "fired": [
                {"id": cue.id, "at_ms": cue.at_ms, "position_ms": pos}
                for cue, pos in replay.fired
            ],
            "skipped": list(replay.skipped_ids),
            "final_state": replay.final_state,
        },
        "cue_visibility_ms": {
            cue.id: gaze.cue_visibility(trace, cue, half_fov_deg)
            for cue, _pos in replay.fired
        },
        "parameters": {
            "grid_cols": grid_cols,
            "grid_rows": grid_rows,
            "half_fov_deg": half_fov_deg,
        },
    }
    if aois is not None:
        report["dwell_times_ms"] = gaze.dwell_times(trace, aois)
    if replay.biometrics:
        bpm = [v for _t, v in replay.biometrics]
        report["biometrics"] = {
            "samples": len(bpm),
            "mean_pulse_bpm": sum(bpm) / len(bpm),
            "max_pulse_bpm": max(bpm),
        }
    return report


def report_to_json(report: dict) -> str:
    """Stable serialization: identical reports are byte-identical."""
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False)
