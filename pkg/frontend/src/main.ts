// Entry point: wire socket -> reducer -> DOM for a live session.
//
//   console.html?ws=ws://127.0.0.1:8360/ws&role=researcher
//
// role=observer shows the same dashboard with the controls hidden.
// A local study.json can be opened to pre-populate pending cue chips
// (the wire only reveals cues as they fire or skip).

import { ConsoleApp } from "./ui.js";
import { ConsoleSocket } from "./socket.js";
import type { CueJson } from "./protocol.js";

function httpOrigin(wsUrl: string): string {
  const u = new URL(wsUrl);
  u.protocol = u.protocol === "wss:" ? "https:" : "http:";
  return u.origin;
}

async function loadManifest(app: ConsoleApp, origin: string, sessionId: string): Promise<void> {
  try {
    const res = await fetch(`${origin}/manifest/${encodeURIComponent(sessionId)}`);
    if (!res.ok) return;
    const manifest = await res.json();
    const video = manifest.video ?? {};
    if (typeof video.width_px === "number" && typeof video.height_px === "number") {
      app.dispatch({ kind: "frame", w: video.width_px, h: video.height_px });
    }
    if (typeof video.url === "string") {
      // poster warm-up: pull the head of the file over a range request
      await fetch(video.url, { headers: { Range: "bytes=0-65535" } });
    }
  } catch {
    // manifest is a nicety; the live view works without it
  }
}

function wireStudyFileInput(app: ConsoleApp): void {
  const input = document.querySelector("#study-file") as HTMLInputElement | null;
  if (!input) return;
  input.addEventListener("change", async () => {
    const file = input.files?.[0];
    if (!file) return;
    try {
      const doc = JSON.parse(await file.text());
      const cues = (doc.cues ?? []) as CueJson[];
      app.dispatch({ kind: "study", cues });
    } catch (exc) {
      app.dispatch({ kind: "decode_error", detail: `study file: ${exc}` });
    }
  });
}

export interface BootOptions {
  wsUrl: string;
  role: "researcher" | "observer";
  sessionId?: string;
  fetchManifest?: boolean;
}

export function boot(root: HTMLElement, opts: BootOptions): { app: ConsoleApp; socket: ConsoleSocket } {
  let app: ConsoleApp;
  let manifestLoaded = false;
  const socket = new ConsoleSocket(opts.wsUrl, opts.role, opts.sessionId, {
    onOpen: () => app.dispatch({ kind: "open" }),
    onClose: () => app.dispatch({ kind: "closed" }),
    onDecodeError: (detail) => app.dispatch({ kind: "decode_error", detail }),
    onMessage: (msg) => {
      app.dispatch({ kind: "server", msg });
      if (msg.type === "welcome" && !manifestLoaded && (opts.fetchManifest ?? true)) {
        manifestLoaded = true;
        void loadManifest(app, httpOrigin(opts.wsUrl), msg.session_id);
      }
    },
  });

  app = new ConsoleApp(root, socket, opts.role);
  wireStudyFileInput(app);
  socket.connect();
  return { app, socket };
}

export function bootFromLocation(root: HTMLElement): { app: ConsoleApp; socket: ConsoleSocket } {
  const params = new URLSearchParams(location.search);
  return boot(root, {
    wsUrl: params.get("ws") ?? `ws://${location.host}/ws`,
    role: params.get("role") === "observer" ? "observer" : "researcher",
    sessionId: params.get("session") ?? undefined,
  });
}

const rootEl = document.querySelector("#app");
if (rootEl instanceof HTMLElement) bootFromLocation(rootEl);
