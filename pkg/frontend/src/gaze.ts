// Port of the orchestrator's gaze math: head quaternion -> viewing
// direction -> equirectangular pixel. Numbers must agree with the Python
// implementation (the golden-vector test holds both to within 0.5 px,
// in practice they match to double precision).

import type { DirectionJson, Quat } from "./protocol.js";

const POLE_EPS = 1e-12;
const DEG = 180 / Math.PI;

// JS % keeps the dividend's sign; this wraps into [-180, 180) like the
// Python modulo does.
export function wrapDeg(x: number): number {
  return ((((x + 180) % 360) + 360) % 360) - 180;
}

export function normalizeQuat(q: Quat): Quat {
  const n = Math.hypot(q[0], q[1], q[2], q[3]);
  if (n < 1e-12) throw new Error("cannot normalize a zero quaternion");
  return [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
}

export function quatMultiply(a: Quat, b: Quat): Quat {
  const [aw, ax, ay, az] = a;
  const [bw, bx, by, bz] = b;
  return [
    aw * bw - ax * bx - ay * by - az * bz,
    aw * bx + ax * bw + ay * bz - az * by,
    aw * by - ax * bz + ay * bw + az * bx,
    aw * bz + ax * by - ay * bx + az * bw,
  ];
}

export function rotateVector(q: Quat, v: [number, number, number]): [number, number, number] {
  const [w, x, y, z] = q;
  const [vx, vy, vz] = v;
  const tx = 2 * (y * vz - z * vy);
  const ty = 2 * (z * vx - x * vz);
  const tz = 2 * (x * vy - y * vx);
  return [
    vx + w * tx + (y * tz - z * ty),
    vy + w * ty + (z * tx - x * tz),
    vz + w * tz + (x * ty - y * tx),
  ];
}

export function directionToUnit(d: DirectionJson): [number, number, number] {
  const yaw = d.yaw_deg / DEG;
  const pitch = d.pitch_deg / DEG;
  const cp = Math.cos(pitch);
  return [cp * Math.sin(yaw), Math.sin(pitch), -cp * Math.cos(yaw)];
}

export function unitToDirection(v: [number, number, number]): DirectionJson {
  let [x, y, z] = v;
  const n = Math.hypot(x, y, z);
  if (n < 1e-12) throw new Error("zero vector has no direction");
  x /= n;
  y /= n;
  z /= n;
  if (Math.hypot(x, z) <= POLE_EPS) {
    return { yaw_deg: 0, pitch_deg: y < 0 ? -90 : 90 };
  }
  return {
    yaw_deg: wrapDeg(Math.atan2(x, -z) * DEG),
    pitch_deg: Math.asin(Math.max(-1, Math.min(1, y))) * DEG,
  };
}

export function quatToDirection(q: Quat): DirectionJson {
  return unitToDirection(rotateVector(normalizeQuat(q), [0, 0, -1]));
}

// Roll-free orientation looking at d; inverse of quatToDirection.
export function directionToQuat(d: DirectionJson): Quat {
  const halfYaw = -d.yaw_deg / DEG / 2;
  const halfPitch = d.pitch_deg / DEG / 2;
  const qYaw: Quat = [Math.cos(halfYaw), 0, Math.sin(halfYaw), 0];
  const qPitch: Quat = [Math.cos(halfPitch), Math.sin(halfPitch), 0, 0];
  return quatMultiply(qYaw, qPitch);
}

export function directionToEquirect(d: DirectionJson, widthPx: number, heightPx: number): [number, number] {
  const u = ((wrapDeg(d.yaw_deg) + 180) / 360) * widthPx;
  const v = ((90 - d.pitch_deg) / 180) * heightPx;
  return [u, v];
}

// What the view needs in one call: marker pixel for a head pose.
export function renderGazeMarker(pose: Quat, frameW: number, frameH: number): [number, number] {
  return directionToEquirect(quatToDirection(pose), frameW, frameH);
}

export function angularDistance(a: DirectionJson, b: DirectionJson): number {
  const va = directionToUnit(a);
  const vb = directionToUnit(b);
  const dot = va[0] * vb[0] + va[1] * vb[1] + va[2] * vb[2];
  return Math.acos(Math.max(-1, Math.min(1, dot))) * DEG;
}
