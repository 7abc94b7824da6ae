"""Attention-direction and audio-accessibility computations.

Arrows and haptic rumble steer a participant toward an off-screen
target; the mono downmix and constant-power stereo pan cover the
audio side.  Everything here is a pure function over pose + target;
waveform synthesis and audio device I/O belong to clients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import Direction, wrap_deg
from .gaze import (
    angular_distance,
    direction_to_unit,
    normalize_quat,
    quat_conjugate,
    quat_to_direction,
    rotate_vector,
)


@dataclass(frozen=True)
class ArrowHint:
    """On-screen guidance arrow.

    screen_angle_deg: 0 points screen-right, 90 screen-up,
    counterclockwise, in [-180, 180).  magnitude_deg is the angular
    distance left to turn.
    """

    screen_angle_deg: float
    magnitude_deg: float


@dataclass(frozen=True)
class StereoGains:
    left: float
    right: float


def _to_head_frame(pose, target: Direction):
    q = normalize_quat(pose)
    return rotate_vector(quat_conjugate(q), direction_to_unit(target))


def guidance_arrow(pose, target: Direction) -> ArrowHint:
    """Where to draw the arrow that leads the gaze to target.

    The target is transformed into the head-local frame; the arrow angle
    is the screen-plane bearing of that local vector.  A target exactly
    ahead or exactly behind has no bearing; angle 0 by convention.
    """
    x, y, z = _to_head_frame(pose, target)
    if math.hypot(x, y) < 1e-12:
        angle = 0.0
    else:
        angle = wrap_deg(math.degrees(math.atan2(y, x)))
    magnitude = angular_distance(quat_to_direction(pose), target)
    return ArrowHint(screen_angle_deg=angle, magnitude_deg=magnitude)


def haptic_level(angular_error_deg: float, half_fov_deg: float) -> float:
    """Rumble intensity in [0, 1]: silent while the target is visible,
    then a linear ramp reaching 1 when the target is directly behind.
    """
    if not 0.0 <= angular_error_deg <= 180.0:
        raise ValueError("angular_error_deg must be in [0, 180]")
    if not 0.0 < half_fov_deg < 180.0:
        raise ValueError("half_fov_deg must be in (0, 180)")
    if angular_error_deg <= half_fov_deg:
        return 0.0
    return (angular_error_deg - half_fov_deg) / (180.0 - half_fov_deg)


def downmix_mono(left, right) -> np.ndarray:
    """Collapse stereo to mono: m[i] = (l[i] + r[i]) / 2."""
    l_arr = np.asarray(left, dtype=np.float64)
    r_arr = np.asarray(right, dtype=np.float64)
    if l_arr.shape != r_arr.shape:
        raise ValueError(f"channel length mismatch: {l_arr.shape} vs {r_arr.shape}")
    return (l_arr + r_arr) / 2.0


def spatial_gains(pose, source: Direction, base_gain: float) -> StereoGains:
    """Constant-power stereo gains for a source at a world direction.

    The source's head-relative yaw maps to a pan position (saturating at
    +/-90 deg); sine/cosine law keeps left^2 + right^2 == base_gain^2 so
    loudness does not dip at center.  Elevation is ignored: stereo has
    no vertical axis.
    """
    if not 0.0 <= base_gain <= 1.0:
        raise ValueError("base_gain must be in [0, 1]")
    x, y, z = _to_head_frame(pose, source)
    if math.hypot(x, z) <= 1e-12:
        rel_yaw = 0.0  # source straight above/below the head: center pan
    else:
        rel_yaw = wrap_deg(math.degrees(math.atan2(x, -z)))
    pan = max(-1.0, min(1.0, rel_yaw / 90.0))
    alpha = math.radians((pan + 1.0) * 45.0)
    return StereoGains(left=math.cos(alpha) * base_gain, right=math.sin(alpha) * base_gain)
