"""Gaze approximation from headset orientation.

Gaze is taken to be the head's forward vector; no eye tracker is
involved.  The coordinate convention used throughout the toolkit:

* right-handed frame, +X right, +Y up, forward = -Z
* yaw  = atan2(f_x, -f_z) in [-180, 180), positive toward +X
* pitch = asin(f_y) in [-90, 90], positive up
* unit vector of a Direction:
  f = (cos(pitch) sin(yaw), sin(pitch), -cos(pitch) cos(yaw))
* Hamilton quaternion rotation v' = q v q^-1, quaternions as (w, x, y, z)

At |pitch| = 90 yaw is degenerate; conversions return yaw 0 there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import Cue, Direction, wrap_deg

Quat = tuple[float, float, float, float]
Vec3 = tuple[float, float, float]

# A trace sample is (t_ms, quaternion); timestamps strictly increase.
TraceSample = tuple[int, Quat]

IDENTITY: Quat = (1.0, 0.0, 0.0, 0.0)

_POLE_EPS = 1e-12


def quat_norm(q) -> float:
    w, x, y, z = q
    return math.sqrt(w * w + x * x + y * y + z * z)


def normalize_quat(q) -> Quat:
    n = quat_norm(q)
    if n < 1e-12:
        raise ValueError("cannot normalize a zero quaternion")
    w, x, y, z = q
    return (w / n, x / n, y / n, z / n)


def quat_conjugate(q) -> Quat:
    w, x, y, z = q
    return (w, -x, -y, -z)


def quat_multiply(a, b) -> Quat:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def rotate_vector(q, v) -> Vec3:
    """Rotate v by unit quaternion q (Hamilton convention, q v q^-1)."""
    w, x, y, z = q
    vx, vy, vz = v
    # Expansion of q * (0, v) * conj(q); avoids building intermediates.
    tx = 2.0 * (y * vz - z * vy)
    ty = 2.0 * (z * vx - x * vz)
    tz = 2.0 * (x * vy - y * vx)
    return (
        vx + w * tx + (y * tz - z * ty),
        vy + w * ty + (z * tx - x * tz),
        vz + w * tz + (x * ty - y * tx),
    )


def direction_to_unit(d: Direction) -> Vec3:
    yaw = math.radians(d.yaw_deg)
    pitch = math.radians(d.pitch_deg)
    cp = math.cos(pitch)
    return (cp * math.sin(yaw), math.sin(pitch), -cp * math.cos(yaw))


def unit_to_direction(v) -> Direction:
    x, y, z = v
    n = math.sqrt(x * x + y * y + z * z)
    if n < 1e-12:
        raise ValueError("zero vector has no direction")
    x, y, z = x / n, y / n, z / n
    if math.hypot(x, z) <= _POLE_EPS:
        return Direction(0.0, math.copysign(90.0, y))
    yaw = math.degrees(math.atan2(x, -z))
    pitch = math.degrees(math.asin(max(-1.0, min(1.0, y))))
    return Direction(wrap_deg(yaw), pitch)


def quat_to_direction(q) -> Direction:
    """Direction the head faces: forward (0, 0, -1) rotated by q."""
    return unit_to_direction(rotate_vector(normalize_quat(q), (0.0, 0.0, -1.0)))


def direction_to_quat(d: Direction) -> Quat:
    """Roll-free orientation looking at d; inverse of quat_to_direction."""
    half_yaw = math.radians(-d.yaw_deg) / 2.0
    half_pitch = math.radians(d.pitch_deg) / 2.0
    q_yaw = (math.cos(half_yaw), 0.0, math.sin(half_yaw), 0.0)
    q_pitch = (math.cos(half_pitch), math.sin(half_pitch), 0.0, 0.0)
    return quat_multiply(q_yaw, q_pitch)


def direction_to_equirect(d: Direction, width_px: float, height_px: float) -> tuple[float, float]:
    """Map a direction onto the equirectangular frame.

    u in [0, width), v in [0, height]; (0, 0) lands at the frame center.
    """
    u = (wrap_deg(d.yaw_deg) + 180.0) / 360.0 * width_px
    v = (90.0 - d.pitch_deg) / 180.0 * height_px
    return (u, v)


def equirect_to_direction(u: float, v: float, width_px: float, height_px: float) -> Direction:
    yaw = u / width_px * 360.0 - 180.0
    pitch = 90.0 - v / height_px * 180.0
    return Direction(wrap_deg(yaw), max(-90.0, min(90.0, pitch)))


def angular_distance(a: Direction, b: Direction) -> float:
    """Great-circle angle between two directions, degrees in [0, 180]."""
    va = direction_to_unit(a)
    vb = direction_to_unit(b)
    dot = va[0] * vb[0] + va[1] * vb[1] + va[2] * vb[2]
    return math.degrees(math.acos(max(-1.0, min(1.0, dot))))


@dataclass(frozen=True)
class Aoi:
    """Yaw/pitch rectangle on the view sphere, extents centered on center."""

    id: str
    center: Direction
    yaw_width_deg: float
    pitch_height_deg: float


def in_aoi(d: Direction, a: Aoi) -> bool:
    dyaw = abs(wrap_deg(d.yaw_deg - a.center.yaw_deg))
    dpitch = abs(d.pitch_deg - a.center.pitch_deg)
    return dyaw <= a.yaw_width_deg / 2.0 and dpitch <= a.pitch_height_deg / 2.0


def validate_trace(trace) -> None:
    """Raise ValueError unless timestamps strictly increase."""
    last = None
    for t, _q in trace:
        if last is not None and t <= last:
            raise ValueError(f"trace timestamps must strictly increase (at {t})")
        last = t


def trace_directions(trace) -> list[Direction]:
    return [quat_to_direction(q) for _t, q in trace]


def dwell_times(trace, aois) -> dict[str, int]:
    """Milliseconds of gaze inside each AOI.

    Sample i contributes t_{i+1} - t_i to every AOI containing its
    direction; the final sample contributes nothing (no data beyond it).
    """
    totals = {a.id: 0 for a in aois}
    dirs = trace_directions(trace)
    for i in range(len(trace) - 1):
        dt = trace[i + 1][0] - trace[i][0]
        for a in aois:
            if in_aoi(dirs[i], a):
                totals[a.id] += dt
    return totals


@dataclass
class HeatmapGrid:
    cols: int
    rows: int
    counts: np.ndarray  # shape (rows, cols), dtype int64

    def max_count(self) -> int:
        return int(self.counts.max()) if self.counts.size else 0

    def total(self) -> int:
        return int(self.counts.sum())


def heatmap(trace, cols: int, rows: int) -> HeatmapGrid:
    """Bin gaze samples onto a cols x rows equirectangular grid.

    Rows near the poles over-count per solid angle, as in any
    equirectangular binning; column totals stay uniform under a uniform
    sphere distribution.
    """
    if cols <= 0 or rows <= 0:
        raise ValueError("grid dimensions must be positive")
    counts = np.zeros((rows, cols), dtype=np.int64)
    for d in trace_directions(trace):
        col = min(int((wrap_deg(d.yaw_deg) + 180.0) / 360.0 * cols), cols - 1)
        row = min(int((90.0 - d.pitch_deg) / 180.0 * rows), rows - 1)
        counts[row, col] += 1
    return HeatmapGrid(cols=cols, rows=rows, counts=counts)


def heatmap_entropy_bits(grid: HeatmapGrid) -> float:
    """Shannon entropy of the bin distribution, in bits."""
    total = grid.total()
    if total == 0:
        return 0.0
    p = grid.counts[grid.counts > 0].astype(np.float64) / total
    return float(-(p * np.log2(p)).sum())


def heatmap_to_pgm(grid: HeatmapGrid) -> str:
    """Plain (P2) PGM text image; pixel values are raw bin counts."""
    maxval = max(grid.max_count(), 1)
    lines = ["P2", f"{grid.cols} {grid.rows}", f"{maxval}"]
    for row in grid.counts:
        lines.append(" ".join(str(int(c)) for c in row))
    return "\n".join(lines) + "\n"


def cue_visibility(trace, cue: Cue, half_fov_deg: float) -> int:
    """Milliseconds the cue's anchor sat within half_fov of the gaze,
    restricted to the cue's display window [at_ms, at_ms + duration_ms].

    Dwell-style: sample i's direction holds until sample i+1; the part
    of that span overlapping the window counts when the sample is
    within range.
    """
    if not 0.0 < half_fov_deg <= 180.0:
        raise ValueError("half_fov_deg must be in (0, 180]")
    start = cue.at_ms
    end = cue.at_ms + cue.duration_ms
    total = 0
    dirs = trace_directions(trace)
    for i in range(len(trace) - 1):
        lo = max(trace[i][0], start)
        hi = min(trace[i + 1][0], end)
        if hi <= lo:
            continue
        if angular_distance(dirs[i], cue.anchor) <= half_fov_deg:
            total += hi - lo
    return total
