// TypeScript mirror of the wire protocol the orchestrator speaks.
// Single-line JSON with a "type" discriminator and "v": 1; unknown extra
// keys are tolerated, missing/miscast fields are rejected with the same
// stable codes the server uses: bad_json | unknown_type | bad_version |
// missing_field.

export const PROTOCOL_VERSION = 1;

export type Role = "researcher" | "headset" | "observer";
export type StateLabel = "loaded" | "running" | "paused" | "completed";

export const STATE_LABELS: StateLabel[] = ["loaded", "running", "paused", "completed"];
const ROLES: Role[] = ["researcher", "headset", "observer"];
const CUE_KINDS = ["text", "arrow", "haptic"];

export type Quat = [number, number, number, number];

export interface DirectionJson {
  yaw_deg: number;
  pitch_deg: number;
}

export interface CueJson {
  id: string;
  at_ms: number;
  duration_ms: number;
  kind: string;
  body?: string;
  target?: DirectionJson;
  anchor: DirectionJson;
}

export type Command =
  | { action: "start" }
  | { action: "pause" }
  | { action: "resume" }
  | { action: "seek"; to_ms: number }
  | { action: "stop" }
  | { action: "inject_cue"; cue: CueJson };

export type Message =
  | { type: "hello"; role: Role; protocol_version: number; session_id?: string }
  | { type: "welcome"; session_id: string; server_time_ms: number; state: StateLabel; position_ms: number }
  | { type: "command"; command: Command }
  | { type: "state"; state: StateLabel; position_ms: number; skipped: string[] }
  | { type: "cue"; cue: CueJson; position_ms?: number }
  | { type: "cue_ack"; cue_id: string; t_ms: number }
  | { type: "pose"; t_ms: number; q: Quat }
  | { type: "biometric"; t_ms: number; pulse_bpm: number }
  | { type: "ping"; t0_ms: number }
  | { type: "pong"; t0_ms: number; server_time_ms: number }
  | { type: "error"; code: string; message: string };

export class ProtocolError extends Error {
  constructor(
    public code: "bad_json" | "unknown_type" | "bad_version" | "missing_field",
    public detail?: unknown,
  ) {
    super(detail === undefined ? code : `${code}: ${detail}`);
    this.name = "ProtocolError";
  }
}

// --- field helpers ----------------------------------------------------------

type Obj = Record<string, unknown>;

function isObj(x: unknown): x is Obj {
  return typeof x === "object" && x !== null && !Array.isArray(x);
}

function getStr(obj: Obj, name: string): string {
  const v = obj[name];
  if (typeof v !== "string") throw new ProtocolError("missing_field", name);
  return v;
}

function getInt(obj: Obj, name: string): number {
  const v = obj[name];
  if (typeof v !== "number" || !Number.isInteger(v)) throw new ProtocolError("missing_field", name);
  return v;
}

function getNum(obj: Obj, name: string): number {
  const v = obj[name];
  if (typeof v !== "number" || !Number.isFinite(v)) throw new ProtocolError("missing_field", name);
  return v;
}

function getObj(obj: Obj, name: string): Obj {
  const v = obj[name];
  if (!isObj(v)) throw new ProtocolError("missing_field", name);
  return v;
}

function decodeDirection(v: unknown, name: string): DirectionJson {
  if (!isObj(v)) throw new ProtocolError("missing_field", name);
  return { yaw_deg: getNum(v, "yaw_deg"), pitch_deg: getNum(v, "pitch_deg") };
}

function decodeCue(v: unknown, name: string): CueJson {
  if (!isObj(v)) throw new ProtocolError("missing_field", name);
  const kind = getStr(v, "kind");
  if (!CUE_KINDS.includes(kind)) throw new ProtocolError("missing_field", `${name}.kind`);
  const cue: CueJson = {
    id: getStr(v, "id"),
    at_ms: getInt(v, "at_ms"),
    duration_ms: getInt(v, "duration_ms"),
    kind,
    anchor: "anchor" in v ? decodeDirection(v.anchor, `${name}.anchor`) : { yaw_deg: 0, pitch_deg: 0 },
  };
  if (kind === "text") cue.body = getStr(v, "body");
  else cue.target = decodeDirection(v.target, `${name}.target`);
  return cue;
}

function decodeCommand(obj: Obj): Command {
  const action = getStr(obj, "action");
  switch (action) {
    case "start":
    case "pause":
    case "resume":
    case "stop":
      return { action };
    case "seek":
      return { action, to_ms: getInt(obj, "to_ms") };
    case "inject_cue":
      return { action, cue: decodeCue(obj.cue, "cue") };
    default:
      throw new ProtocolError("missing_field", "action");
  }
}

function decodeStateLabel(v: unknown, name: string): StateLabel {
  if (typeof v !== "string" || !STATE_LABELS.includes(v as StateLabel)) {
    throw new ProtocolError("missing_field", name);
  }
  return v as StateLabel;
}

function decodeQuat(obj: Obj): Quat {
  const raw = obj.q;
  if (!Array.isArray(raw) || raw.length !== 4) throw new ProtocolError("missing_field", "q");
  const vals: number[] = [];
  for (const c of raw) {
    if (typeof c !== "number" || !Number.isFinite(c)) throw new ProtocolError("missing_field", "q");
    vals.push(c);
  }
  const norm = Math.hypot(vals[0]!, vals[1]!, vals[2]!, vals[3]!);
  if (norm < 1e-9) throw new ProtocolError("missing_field", "q");
  if (Math.abs(norm - 1.0) > 1e-6) {
    return [vals[0]! / norm, vals[1]! / norm, vals[2]! / norm, vals[3]! / norm];
  }
  return [vals[0]!, vals[1]!, vals[2]!, vals[3]!];
}

// --- decode -----------------------------------------------------------------

export function decode(text: string): Message {
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch (exc) {
    throw new ProtocolError("bad_json", String(exc));
  }
  if (!isObj(obj)) throw new ProtocolError("bad_json", "not an object");
  const version = getInt(obj, "v");
  if (version !== PROTOCOL_VERSION) throw new ProtocolError("bad_version", version);
  const mtype = getStr(obj, "type");
  switch (mtype) {
    case "hello": {
      const role = getStr(obj, "role");
      if (!ROLES.includes(role as Role)) throw new ProtocolError("missing_field", "role");
      const out: Message = {
        type: "hello",
        role: role as Role,
        protocol_version: getInt(obj, "protocol_version"),
      };
      const sid = obj.session_id;
      if (sid !== undefined && sid !== null) {
        if (typeof sid !== "string") throw new ProtocolError("missing_field", "session_id");
        out.session_id = sid;
      }
      return out;
    }
    case "welcome": {
      const nested = getObj(obj, "state");
      return {
        type: "welcome",
        session_id: getStr(obj, "session_id"),
        server_time_ms: getInt(obj, "server_time_ms"),
        state: decodeStateLabel(nested.state, "state.state"),
        position_ms: getInt(nested, "position_ms"),
      };
    }
    case "command":
      return { type: "command", command: decodeCommand(obj) };
    case "state": {
      const skippedRaw = obj.skipped ?? [];
      if (!Array.isArray(skippedRaw) || !skippedRaw.every((s) => typeof s === "string")) {
        throw new ProtocolError("missing_field", "skipped");
      }
      return {
        type: "state",
        state: decodeStateLabel(obj.state, "state"),
        position_ms: getInt(obj, "position_ms"),
        skipped: skippedRaw as string[],
      };
    }
    case "cue": {
      const pos = obj.position_ms;
      const out: Message = { type: "cue", cue: decodeCue(obj.cue, "cue") };
      if (pos !== undefined && pos !== null) {
        if (typeof pos !== "number" || !Number.isInteger(pos)) {
          throw new ProtocolError("missing_field", "position_ms");
        }
        out.position_ms = pos;
      }
      return out;
    }
    case "cue_ack":
      return { type: "cue_ack", cue_id: getStr(obj, "cue_id"), t_ms: getInt(obj, "t_ms") };
    case "pose":
      return { type: "pose", t_ms: getInt(obj, "t_ms"), q: decodeQuat(obj) };
    case "biometric":
      return { type: "biometric", t_ms: getInt(obj, "t_ms"), pulse_bpm: getNum(obj, "pulse_bpm") };
    case "ping":
      return { type: "ping", t0_ms: getInt(obj, "t0_ms") };
    case "pong":
      return { type: "pong", t0_ms: getInt(obj, "t0_ms"), server_time_ms: getInt(obj, "server_time_ms") };
    case "error":
      return { type: "error", code: getStr(obj, "code"), message: getStr(obj, "message") };
    default:
      throw new ProtocolError("unknown_type", mtype);
  }
}

// --- encode -----------------------------------------------------------------

export function encode(m: Message): string {
  let body: Obj;
  switch (m.type) {
    case "hello":
      body = { type: "hello", role: m.role, protocol_version: m.protocol_version };
      if (m.session_id !== undefined) body.session_id = m.session_id;
      break;
    case "welcome":
      body = {
        type: "welcome",
        session_id: m.session_id,
        server_time_ms: m.server_time_ms,
        state: { state: m.state, position_ms: m.position_ms },
      };
      break;
    case "command":
      body = { type: "command", ...m.command };
      break;
    case "state":
      body = { type: "state", state: m.state, position_ms: m.position_ms };
      if (m.skipped.length) body.skipped = m.skipped;
      break;
    case "cue":
      body = { type: "cue", cue: m.cue };
      if (m.position_ms !== undefined) body.position_ms = m.position_ms;
      break;
    case "cue_ack":
      body = { type: "cue_ack", cue_id: m.cue_id, t_ms: m.t_ms };
      break;
    case "pose":
      body = { type: "pose", t_ms: m.t_ms, q: m.q };
      break;
    case "biometric":
      body = { type: "biometric", t_ms: m.t_ms, pulse_bpm: m.pulse_bpm };
      break;
    case "ping":
      body = { type: "ping", t0_ms: m.t0_ms };
      break;
    case "pong":
      body = { type: "pong", t0_ms: m.t0_ms, server_time_ms: m.server_time_ms };
      break;
    case "error":
      body = { type: "error", code: m.code, message: m.message };
      break;
  }
  body.v = PROTOCOL_VERSION;
  return JSON.stringify(body);
}

// --- clock alignment ----------------------------------------------------------

export function estimateOffset(t0Ms: number, serverTimeMs: number, t1Ms: number): { offset: number; rtt: number } {
  if (t1Ms < t0Ms) throw new Error("receive time precedes send time");
  const rtt = t1Ms - t0Ms;
  return { offset: serverTimeMs - (t0Ms + rtt / 2), rtt };
}
