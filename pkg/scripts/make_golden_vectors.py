"""Regenerate golden/gaze_vectors.json, the shared gaze-math fixture.

Ten unit quaternions with the yaw/pitch and equirect pixel position the
gaze module computes for them on a 1920x960 frame.  The browser console
re-implements quat -> direction -> (u, v) in TypeScript and must agree
with this file to within half a pixel; tests/test_gaze.py pins the
committed copy against the Python implementation.

Run from the repo root after any deliberate change to the math:
    python3 scripts/make_golden_vectors.py
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from study360.gaze import direction_to_equirect, normalize_quat, quat_to_direction

FRAME_W = 1920.0
FRAME_H = 960.0

S2 = math.sqrt(2.0) / 2.0

# Hand-picked spread: identity, single-axis quarter turns, a pole,
# and a few arbitrary (pre-normalization) orientations.
RAW_QUATS = [
    (1.0, 0.0, 0.0, 0.0),
    (S2, 0.0, S2, 0.0),
    (S2, 0.0, -S2, 0.0),
    (S2, S2, 0.0, 0.0),
    (S2, -S2, 0.0, 0.0),
    (0.0, 0.0, 1.0, 0.0),
    (0.9, 0.1, 0.3, -0.2),
    (0.5, -0.4, 0.6, 0.2),
    (-0.7, 0.3, -0.1, 0.5),
    (0.2, 0.9, -0.3, 0.1),
]


def build() -> dict:
    vectors = []
    for raw in RAW_QUATS:
        q = normalize_quat(raw)
        d = quat_to_direction(q)
        u, v = direction_to_equirect(d, FRAME_W, FRAME_H)
        vectors.append(
            {
                "quat": {"w": q[0], "x": q[1], "y": q[2], "z": q[3]},
                "yaw_deg": d.yaw_deg,
                "pitch_deg": d.pitch_deg,
                "u": u,
                "v": v,
            }
        )
    return {"frame_w": FRAME_W, "frame_h": FRAME_H, "vectors": vectors}


def main() -> None:
    out = Path(__file__).resolve().parent.parent / "golden" / "gaze_vectors.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(build(), indent=2) + "\n", encoding="utf-8")
    print(f"wrote {out} ({len(RAW_QUATS)} vectors)")


if __name__ == "__main__":
    main()
