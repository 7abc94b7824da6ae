// All console state lives in one ViewModel and changes only through
// reduce(). Socket events, local study-file loads and sent commands are
// all actions; the UI is a pure render of the result.

import { angularDistance, quatToDirection, renderGazeMarker } from "./gaze.js";
import type { Command, CueJson, DirectionJson, Message, Quat, StateLabel } from "./protocol.js";

export type CueStatus = "pending" | "fired" | "skipped";

export interface TimelineEntry {
  cue: CueJson;
  status: CueStatus;
  // session position when the server fired it (CueMsg.position_ms,
  // falling back to at_ms for servers that omit it)
  firedPositionMs: number | null;
}

export interface PoseView {
  tMs: number;
  q: Quat;
  direction: DirectionJson;
  u: number;
  v: number;
}

export interface ViewModel {
  connection: "connecting" | "open" | "closed";
  role: "researcher" | "observer";
  sessionId: string | null;
  serverTimeMs: number | null;
  clockOffsetMs: number | null;
  state: StateLabel | null;
  positionMs: number;
  pose: PoseView | null;
  timeline: TimelineEntry[];
  dwellMs: Record<string, number>;
  events: string[];
  lastError: string | null;
  frameW: number;
  frameH: number;
  halfFovDeg: number;
  // dwell bookkeeping: last State's position and the pose timestamp that
  // anchored it, so positions between heartbeats can be estimated
  posAnchor: { positionMs: number; poseTMs: number | null } | null;
}

export type Action =
  | { kind: "connecting" }
  | { kind: "open" }
  | { kind: "closed" }
  | { kind: "server"; msg: Message }
  | { kind: "sent"; command: Command }
  | { kind: "study"; cues: CueJson[] }
  | { kind: "frame"; w: number; h: number }
  | { kind: "decode_error"; detail: string };

const MAX_FEED = 200;

export function initialViewModel(role: "researcher" | "observer"): ViewModel {
  return {
    connection: "connecting",
    role,
    sessionId: null,
    serverTimeMs: null,
    clockOffsetMs: null,
    state: null,
    positionMs: 0,
    pose: null,
    timeline: [],
    dwellMs: {},
    events: [],
    lastError: null,
    frameW: 1920,
    frameH: 960,
    halfFovDeg: 45,
    posAnchor: null,
  };
}

// Mirrors the server's transition table: buttons for anything this
// rejects are rendered disabled and dispatchCommand refuses to send.
export function commandAllowed(state: StateLabel | null, action: Command["action"]): boolean {
  if (state === null) return false;
  switch (action) {
    case "start":
      return state === "loaded";
    case "pause":
      return state === "running";
    case "resume":
      return state === "paused";
    case "seek":
      return state === "running" || state === "paused";
    case "stop":
    case "inject_cue":
      return state !== "completed";
  }
}

function pushEvent(vm: ViewModel, line: string): ViewModel {
  const events = [...vm.events, line];
  if (events.length > MAX_FEED) events.splice(0, events.length - MAX_FEED);
  return { ...vm, events };
}

function sortTimeline(entries: TimelineEntry[]): TimelineEntry[] {
  return [...entries].sort((a, b) => a.cue.at_ms - b.cue.at_ms || (a.cue.id < b.cue.id ? -1 : 1));
}

function upsertCue(vm: ViewModel, cue: CueJson, status: CueStatus, firedPositionMs: number | null): ViewModel {
  const existing = vm.timeline.find((e) => e.cue.id === cue.id);
  let timeline: TimelineEntry[];
  if (existing) {
    timeline = vm.timeline.map((e) =>
      e.cue.id === cue.id ? { cue: { ...e.cue, ...cue }, status, firedPositionMs } : e,
    );
  } else {
    timeline = [...vm.timeline, { cue, status, firedPositionMs }];
  }
  return { ...vm, timeline: sortTimeline(timeline) };
}

function markSkipped(vm: ViewModel, ids: string[]): ViewModel {
  if (!ids.length) return vm;
  const known = new Set(vm.timeline.map((e) => e.cue.id));
  let timeline = vm.timeline.map((e) =>
    ids.includes(e.cue.id) && e.status !== "fired"
      ? { ...e, status: "skipped" as CueStatus, firedPositionMs: null }
      : e,
  );
  for (const id of ids) {
    if (!known.has(id)) {
      // skipped notice for a cue we never saw: synthesize a stub chip
      timeline = [
        ...timeline,
        {
          cue: { id, at_ms: 0, duration_ms: 0, kind: "text", body: "", anchor: { yaw_deg: 0, pitch_deg: 0 } },
          status: "skipped",
          firedPositionMs: null,
        },
      ];
    }
  }
  return { ...vm, timeline: sortTimeline(timeline) };
}

// Estimated session position at a pose timestamp: last State position
// plus elapsed pose time while running. Heartbeats re-anchor every
// 250 ms so drift stays bounded.
function estimatePosition(vm: ViewModel, poseTMs: number): number {
  if (vm.posAnchor === null) return vm.positionMs;
  if (vm.state !== "running") return vm.posAnchor.positionMs;
  const base = vm.posAnchor.poseTMs ?? poseTMs;
  return vm.posAnchor.positionMs + (poseTMs - base);
}

// Dwell attribution, sample-and-hold like the analytics side: the
// previous pose's direction counts for the interval up to this pose,
// toward every cue whose window covers it and whose anchor is in view.
function accrueDwell(vm: ViewModel, nextTMs: number): ViewModel {
  const prev = vm.pose;
  if (prev === null || nextTMs <= prev.tMs) return vm;
  const dt = nextTMs - prev.tMs;
  const pos = estimatePosition(vm, prev.tMs);
  let dwellMs = vm.dwellMs;
  for (const entry of vm.timeline) {
    const { cue } = entry;
    if (pos < cue.at_ms || pos >= cue.at_ms + cue.duration_ms) continue;
    if (angularDistance(prev.direction, cue.anchor) > vm.halfFovDeg) continue;
    dwellMs = { ...dwellMs, [cue.id]: (dwellMs[cue.id] ?? 0) + dt };
  }
  return dwellMs === vm.dwellMs ? vm : { ...vm, dwellMs };
}

function onServer(vm: ViewModel, msg: Message): ViewModel {
  switch (msg.type) {
    case "welcome": {
      // (re)joining: rebuild from the live state; chip statuses reset and
      // are re-derived from whatever events follow
      const timeline = vm.timeline.map((e) => ({
        ...e,
        status: "pending" as CueStatus,
        firedPositionMs: null,
      }));
      vm = {
        ...vm,
        sessionId: msg.session_id,
        serverTimeMs: msg.server_time_ms,
        state: msg.state,
        positionMs: msg.position_ms,
        timeline: sortTimeline(timeline),
        pose: null,
        posAnchor: { positionMs: msg.position_ms, poseTMs: null },
      };
      return pushEvent(vm, `joined ${msg.session_id} (${msg.state} @ ${msg.position_ms} ms)`);
    }
    case "state": {
      vm = markSkipped(vm, msg.skipped);
      const changed = vm.state !== msg.state;
      vm = {
        ...vm,
        state: msg.state,
        positionMs: msg.position_ms,
        posAnchor: { positionMs: msg.position_ms, poseTMs: vm.pose?.tMs ?? null },
      };
      for (const id of msg.skipped) vm = pushEvent(vm, `cue "${id}" skipped`);
      if (changed) vm = pushEvent(vm, `state → ${msg.state} @ ${msg.position_ms} ms`);
      return vm;
    }
    case "cue": {
      const pos = msg.position_ms ?? msg.cue.at_ms;
      vm = upsertCue(vm, msg.cue, "fired", pos);
      return pushEvent(vm, `cue "${msg.cue.id}" fired @ ${pos} ms`);
    }
    case "pose": {
      vm = accrueDwell(vm, msg.t_ms);
      const direction = quatToDirection(msg.q);
      const [u, v] = renderGazeMarker(msg.q, vm.frameW, vm.frameH);
      const posAnchor =
        vm.posAnchor && vm.posAnchor.poseTMs === null
          ? { ...vm.posAnchor, poseTMs: msg.t_ms }
          : vm.posAnchor;
      return { ...vm, pose: { tMs: msg.t_ms, q: msg.q, direction, u, v }, posAnchor };
    }
    case "pong": {
      const t1 = Date.now();
      const offset =
        t1 >= msg.t0_ms ? Math.round(msg.server_time_ms - (msg.t0_ms + (t1 - msg.t0_ms) / 2)) : null;
      return { ...vm, serverTimeMs: msg.server_time_ms, clockOffsetMs: offset };
    }
    case "error":
      return pushEvent({ ...vm, lastError: `${msg.code}: ${msg.message}` }, `server error ${msg.code}`);
    case "biometric":
      return pushEvent(vm, `biometric pulse ${msg.pulse_bpm} bpm @ ${msg.t_ms} ms`);
    case "cue_ack":
      return pushEvent(vm, `headset acked cue "${msg.cue_id}"`);
    default:
      // hello/command/ping are client->server; a compliant server never
      // sends them, so just surface them in the feed
      return pushEvent(vm, `unexpected ${msg.type} from server`);
  }
}

export function reduce(vm: ViewModel, action: Action): ViewModel {
  switch (action.kind) {
    case "connecting":
      return { ...vm, connection: "connecting" };
    case "open":
      return pushEvent({ ...vm, connection: "open", lastError: null }, "socket open");
    case "closed":
      return pushEvent({ ...vm, connection: "closed", pose: null }, "socket closed");
    case "server":
      return onServer(vm, action.msg);
    case "sent": {
      const c = action.command;
      if (c.action === "inject_cue") {
        vm = upsertCue(vm, c.cue, "pending", null);
      }
      return pushEvent(vm, `sent ${c.action}`);
    }
    case "study": {
      let next = vm;
      for (const cue of action.cues) {
        if (!next.timeline.some((e) => e.cue.id === cue.id)) {
          next = upsertCue(next, cue, "pending", null);
        }
      }
      return pushEvent(next, `study file loaded (${action.cues.length} cues)`);
    }
    case "frame":
      return { ...vm, frameW: action.w, frameH: action.h };
    case "decode_error":
      return pushEvent(vm, `undecodable message: ${action.detail}`);
  }
}
