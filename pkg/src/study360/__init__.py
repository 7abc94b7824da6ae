"""Orchestration toolkit for cue-scheduled 360-video studies.

Server-side session control, a wire protocol for headset/researcher/
observer peers, ranged media serving, gaze analytics, accessibility
cue transforms, a hardware-free headset simulator, and JSONL session
logs with replay — everything runs on a desk with no headset attached.
"""

__version__ = "0.1.0"
