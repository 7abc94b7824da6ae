"""Write a ready-to-serve sample study: config, media files, AOI file.

Usage:
    python3 scripts/make_sample_study.py [--out-dir sample_study]

The media files are placeholder bytes (the server only streams them;
nothing decodes video in this repo), but their lengths are realistic
enough to exercise range requests.  After running::

    study360 serve --config sample_study/study.json --media-dir sample_study/media
"""

from __future__ import annotations

import argparse
import json
import random
from pathlib import Path

STUDY = {
    "version": 1,
    "session_label": "museum-pilot",
    "media": {
        "url": "tour.mp4",
        "duration_ms": 90_000,
        "projection": "equirectangular",
        "width_px": 3840,
        "height_px": 1920,
    },
    "audio_tracks": [
        {"id": "ambience", "url": "audio/ambience.wav", "start_ms": 0, "gain": 0.6, "mode": "mono"},
        {
            "id": "narration",
            "url": "audio/narration.wav",
            "start_ms": 5_000,
            "gain": 1.0,
            "mode": "spatial",
            "anchor": {"yaw_deg": 0.0, "pitch_deg": 0.0},
        },
    ],
    "cues": [
        {
            "id": "welcome",
            "at_ms": 2_000,
            "duration_ms": 4_000,
            "kind": "text",
            "body": "Welcome. Look around freely.",
        },
        {
            "id": "statue",
            "at_ms": 15_000,
            "duration_ms": 6_000,
            "kind": "text",
            "body": "The statue on your left dates from 1650.",
            "anchor": {"yaw_deg": -90.0, "pitch_deg": 0.0},
        },
        {
            "id": "ceiling",
            "at_ms": 30_000,
            "duration_ms": 5_000,
            "kind": "arrow",
            "target": {"yaw_deg": 0.0, "pitch_deg": 60.0},
        },
        {
            "id": "exit-buzz",
            "at_ms": 80_000,
            "duration_ms": 1_000,
            "kind": "haptic",
            "target": {"yaw_deg": 180.0, "pitch_deg": 0.0},
        },
    ],
}

AOIS = [
    {"id": "statue", "center": {"yaw_deg": -90.0, "pitch_deg": 0.0}, "yaw_width_deg": 60.0, "pitch_height_deg": 50.0},
    {"id": "ceiling", "center": {"yaw_deg": 0.0, "pitch_deg": 60.0}, "yaw_width_deg": 120.0, "pitch_height_deg": 60.0},
    {"id": "entrance", "center": {"yaw_deg": 180.0, "pitch_deg": 0.0}, "yaw_width_deg": 40.0, "pitch_height_deg": 40.0},
]

# Placeholder media sizes: big enough that 206 responses are interesting.
MEDIA_BYTES = {
    "tour.mp4": 2_000_000,
    "audio/ambience.wav": 400_000,
    "audio/narration.wav": 250_000,
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", default="sample_study")
    args = ap.parse_args()

    out = Path(args.out_dir)
    media = out / "media"
    media.mkdir(parents=True, exist_ok=True)

    (out / "study.json").write_text(json.dumps(STUDY, indent=2) + "\n", encoding="utf-8")
    (out / "aois.json").write_text(json.dumps(AOIS, indent=2) + "\n", encoding="utf-8")

    rng = random.Random(360)
    for rel, size in MEDIA_BYTES.items():
        path = media / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(rng.randbytes(size))

    print(f"wrote {out / 'study.json'}")
    print(f"wrote {out / 'aois.json'}")
    print(f"wrote {len(MEDIA_BYTES)} media file(s) under {media}")
    print()
    print("serve it with:")
    print(f"  study360 serve --config {out / 'study.json'} --media-dir {media}")


if __name__ == "__main__":
    main()
