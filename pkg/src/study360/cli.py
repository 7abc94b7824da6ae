"""Command-line toolkit: serve a session, validate configs, run the
headset simulator against a live server, analyze session logs.

Exit codes: 0 success, 1 operational failure (connection refused, port
busy, missing file), 2 invalid input (usage, config violations, parse
errors).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import gaze, server
from .config import ParseError, load_study, validate_study
from .eventlog import analyze, load_aois, replay_trace, report_to_json
from .simulator import MotionScript, Scripted, SeekCues, SimConfig, run_sim

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_INVALID = 2

LOG_DIR_ENV = "STUDY360_LOG_DIR"


def resolve_log_path(log_arg: str) -> Path:
    """Honor the log-directory override: keep the file name, move the dir."""
    override = os.environ.get(LOG_DIR_ENV)
    if override:
        return Path(override) / Path(log_arg).name
    return Path(log_arg)


def _check_config(path: str) -> int:
    """Print problems to stderr; 0 when the study file is usable."""
    try:
        cfg = load_study(path)
    except FileNotFoundError:
        print(f"no such file: {path}", file=sys.stderr)
        return EXIT_RUNTIME
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    violations = validate_study(cfg)
    if violations:
        for v in violations:
            print(f"{v.code} {v.subject}: {v.message}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    rc = _check_config(args.config)
    if rc == EXIT_OK:
        cfg = load_study(args.config)
        print(
            f"ok: {len(cfg.cues)} cue(s), {len(cfg.audio_tracks)} audio track(s), "
            f"{cfg.media.duration_ms} ms"
        )
    return rc


def _cmd_serve(args: argparse.Namespace) -> int:
    rc = _check_config(args.config)
    if rc != EXIT_OK:
        return rc
    log_path = resolve_log_path(args.log)
    log_path.parent.mkdir(parents=True, exist_ok=True)
    try:
        server.serve(
            args.config,
            args.media_dir,
            args.port,
            log_path,
            host=args.host,
            tcp_port=args.tcp_port,
        )
    except KeyboardInterrupt:
        return EXIT_OK
    except OSError as exc:
        print(f"serve failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _cmd_simulate(args: argparse.Namespace) -> int:
    if args.script is not None:
        try:
            with open(args.script, "r", encoding="utf-8") as f:
                behavior = Scripted(MotionScript.from_json(json.load(f)))
        except FileNotFoundError:
            print(f"no such file: {args.script}", file=sys.stderr)
            return EXIT_RUNTIME
        except (json.JSONDecodeError, ValueError, TypeError) as exc:
            print(f"bad motion script: {exc}", file=sys.stderr)
            return EXIT_INVALID
    else:
        behavior = SeekCues(
            max_speed_deg_per_s=args.speed,
            reaction_latency_ms=args.latency,
            half_fov_deg=args.half_fov,
        )
    sim_cfg = SimConfig(behavior=behavior, pose_rate_hz=args.rate)
    try:
        report = run_sim(args.endpoint, sim_cfg, args.duration, session_id=args.session)
    except (ConnectionError, OSError, RuntimeError) as exc:
        print(f"simulate failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(
        json.dumps(
            {
                "poses_sent": report.poses_sent,
                "cues_received": report.cues_received,
                "cue_acks": report.cue_acks,
                "alignment_events": [
                    {"cue_id": cid, "t_ms": t} for cid, t in report.alignment_events
                ],
            },
            indent=2,
        )
    )
    return EXIT_OK


def _parse_grid(text: str) -> tuple[int, int]:
    cols_s, _, rows_s = text.lower().partition("x")
    cols, rows = int(cols_s), int(rows_s)
    if cols < 1 or rows < 1:
        raise ValueError("grid dimensions must be positive")
    return cols, rows


def _cmd_analyze(args: argparse.Namespace) -> int:
    try:
        cols, rows = _parse_grid(args.grid)
    except ValueError as exc:
        print(f"bad --grid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    aois = None
    if args.aois is not None:
        try:
            aois = load_aois(args.aois)
        except FileNotFoundError:
            print(f"no such file: {args.aois}", file=sys.stderr)
            return EXIT_RUNTIME
        except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
            print(f"bad AOI file: {exc}", file=sys.stderr)
            return EXIT_INVALID
    try:
        report = analyze(args.log, aois, cols, rows, args.half_fov)
    except FileNotFoundError:
        print(f"no such file: {args.log}", file=sys.stderr)
        return EXIT_RUNTIME
    text = report_to_json(report)
    if args.out_dir is None:
        print(text)
        return EXIT_OK
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(text + "\n", encoding="utf-8")
    written = [out_dir / "report.json"]
    trace = replay_trace(args.log).trace
    if trace:
        grid = gaze.heatmap(trace, cols, rows)
        (out_dir / "heatmap.pgm").write_text(gaze.heatmap_to_pgm(grid), encoding="utf-8")
        written.append(out_dir / "heatmap.pgm")
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="study360")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="host a session over WebSocket/HTTP")
    p.add_argument("--config", required=True)
    p.add_argument("--media-dir", required=True)
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--log", required=True, help="JSONL session log path")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--tcp-port", type=int, default=None, help="also listen on raw framed TCP")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("validate", help="check a study file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("simulate", help="run the headset simulator against a server")
    p.add_argument("--endpoint", required=True, help="ws://host:port/ws or tcp://host:port")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--script", default=None, help="keyframe motion script (JSON)")
    mode.add_argument("--seek", action="store_true", help="turn toward each cue")
    p.add_argument("--rate", type=int, default=30, help="pose rate in Hz")
    p.add_argument("--duration", type=int, required=True, help="run length in ms")
    p.add_argument("--speed", type=float, default=90.0, help="seek speed, deg/s")
    p.add_argument("--latency", type=int, default=0, help="seek reaction latency, ms")
    p.add_argument("--half-fov", type=float, default=45.0)
    p.add_argument("--session", default=None, help="expected session id")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("analyze", help="replay a log into a gaze report")
    p.add_argument("--log", required=True)
    p.add_argument("--aois", default=None, help="AOI definitions (JSON)")
    p.add_argument("--grid", default="8x4", help="heatmap grid, COLSxROWS")
    p.add_argument("--half-fov", type=float, default=45.0)
    p.add_argument("--out-dir", default=None, help="write report.json (+ heatmap.pgm) here")
    p.set_defaults(func=_cmd_analyze)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
