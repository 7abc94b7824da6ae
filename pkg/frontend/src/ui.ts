// Imperative DOM console: one ConsoleApp owns the ViewModel, every
// change goes through dispatch(), render() repaints from scratch.
// No framework; the page is small enough that full repaints are free.

import { commandAllowed, initialViewModel, reduce, type Action, type ViewModel } from "./state.js";
import type { Command, CueJson } from "./protocol.js";

export interface CommandSender {
  sendCommand(command: Command): boolean;
}

const COMMAND_BUTTONS: Array<{ id: string; label: string; action: Command["action"] }> = [
  { id: "btn-start", label: "Start", action: "start" },
  { id: "btn-pause", label: "Pause", action: "pause" },
  { id: "btn-resume", label: "Resume", action: "resume" },
  { id: "btn-stop", label: "Stop", action: "stop" },
];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text) node.textContent = text;
  return node;
}

export class ConsoleApp {
  vm: ViewModel;
  private injectCounter = 0;

  constructor(
    private root: HTMLElement,
    private sender: CommandSender,
    role: "researcher" | "observer",
  ) {
    this.vm = initialViewModel(role);
    this.buildDom();
    this.render();
  }

  dispatch(action: Action): void {
    this.vm = reduce(this.vm, action);
    this.render();
  }

  // Gated send: refuses (and sends nothing) when the session state
  // forbids the command, mirroring the server's transition table.
  sendCommand(command: Command): boolean {
    if (this.vm.role !== "researcher") return false;
    if (!commandAllowed(this.vm.state, command.action)) return false;
    if (!this.sender.sendCommand(command)) return false;
    this.dispatch({ kind: "sent", command });
    return true;
  }

  private buildDom(): void {
    this.root.innerHTML = "";

    const status = el("div", { id: "status" });
    status.append(
      el("span", { id: "conn" }),
      el("span", { id: "session" }),
      el("span", { id: "state" }),
      el("span", { id: "position" }),
    );

    const frame = el("div", { id: "frame" });
    frame.append(el("div", { id: "marker", hidden: "" }));
    const pose = el("div", { id: "pose" }, "no pose yet");

    const controls = el("div", { id: "controls" });
    for (const b of COMMAND_BUTTONS) {
      const btn = el("button", { id: b.id }, b.label);
      btn.addEventListener("click", () => this.sendCommand({ action: b.action } as Command));
      controls.append(btn);
    }
    const seekInput = el("input", { id: "seek-ms", type: "number", value: "0", min: "0" });
    const seekBtn = el("button", { id: "btn-seek" }, "Seek");
    seekBtn.addEventListener("click", () => {
      const to = Number((this.root.querySelector("#seek-ms") as HTMLInputElement).value);
      if (Number.isInteger(to) && to >= 0) this.sendCommand({ action: "seek", to_ms: to });
    });
    controls.append(seekInput, seekBtn);

    const inject = el("div", { id: "inject" });
    inject.append(
      el("input", { id: "inject-body", placeholder: "cue text" }),
      el("input", { id: "inject-duration", type: "number", value: "3000" }),
      el("input", { id: "inject-yaw", type: "number", value: "0" }),
      el("input", { id: "inject-pitch", type: "number", value: "0" }),
    );
    const injectBtn = el("button", { id: "btn-inject" }, "Inject cue");
    injectBtn.addEventListener("click", () => this.submitInject());
    inject.append(injectBtn);
    controls.append(inject);

    const timeline = el("ul", { id: "timeline" });
    const dwell = el("table", { id: "dwell" });
    const error = el("div", { id: "error", hidden: "" });
    const feed = el("ul", { id: "feed" });

    this.root.append(status, frame, pose, controls, error, timeline, dwell, feed);
  }

  private submitInject(): void {
    const val = (id: string) => (this.root.querySelector(`#${id}`) as HTMLInputElement).value;
    const body = val("inject-body").trim();
    if (!body) return;
    this.injectCounter += 1;
    const cue: CueJson = {
      id: `inj-${this.injectCounter}`,
      at_ms: this.vm.positionMs + 1000,
      duration_ms: Number(val("inject-duration")) || 3000,
      kind: "text",
      body,
      anchor: { yaw_deg: Number(val("inject-yaw")) || 0, pitch_deg: Number(val("inject-pitch")) || 0 },
    };
    while (this.vm.timeline.some((e) => e.cue.id === cue.id)) {
      this.injectCounter += 1;
      cue.id = `inj-${this.injectCounter}`;
    }
    this.sendCommand({ action: "inject_cue", cue });
  }

  private q(sel: string): HTMLElement {
    return this.root.querySelector(sel) as HTMLElement;
  }

  render(): void {
    const vm = this.vm;
    this.q("#conn").textContent = vm.connection;
    this.q("#conn").dataset.connection = vm.connection;
    this.q("#session").textContent = vm.sessionId ?? "–";
    const stateEl = this.q("#state");
    stateEl.textContent = vm.state ?? "–";
    stateEl.dataset.state = vm.state ?? "";
    this.q("#position").textContent = `${vm.positionMs} ms`;

    const marker = this.q("#marker");
    if (vm.pose === null) {
      marker.hidden = true;
      this.q("#pose").textContent = "no pose yet";
    } else {
      marker.hidden = false;
      marker.style.left = `${(vm.pose.u / vm.frameW) * 100}%`;
      marker.style.top = `${(vm.pose.v / vm.frameH) * 100}%`;
      const d = vm.pose.direction;
      this.q("#pose").textContent =
        `yaw ${d.yaw_deg.toFixed(1)}° pitch ${d.pitch_deg.toFixed(1)}° → ` +
        `(${vm.pose.u.toFixed(1)}, ${vm.pose.v.toFixed(1)}) px`;
    }

    const controls = this.q("#controls");
    controls.hidden = vm.role !== "researcher";
    for (const b of COMMAND_BUTTONS) {
      (this.q(`#${b.id}`) as HTMLButtonElement).disabled = !commandAllowed(vm.state, b.action);
    }
    (this.q("#btn-seek") as HTMLButtonElement).disabled = !commandAllowed(vm.state, "seek");
    (this.q("#btn-inject") as HTMLButtonElement).disabled = !commandAllowed(vm.state, "inject_cue");

    const error = this.q("#error");
    error.hidden = vm.lastError === null;
    error.textContent = vm.lastError ?? "";

    const timeline = this.q("#timeline");
    timeline.innerHTML = "";
    for (const entry of vm.timeline) {
      const li = el("li", { class: `chip ${entry.status}`, "data-cue": entry.cue.id });
      let label = `${entry.cue.id} @ ${entry.cue.at_ms} ms`;
      if (entry.status === "fired") label += ` — fired @ ${entry.firedPositionMs} ms`;
      if (entry.status === "skipped") label += " — skipped";
      li.textContent = label;
      timeline.append(li);
    }

    const dwell = this.q("#dwell");
    dwell.innerHTML = "";
    for (const [id, ms] of Object.entries(vm.dwellMs).sort()) {
      const row = el("tr", { "data-cue": id });
      row.append(el("td", {}, id), el("td", {}, `${ms} ms`));
      dwell.append(row);
    }

    const feed = this.q("#feed");
    feed.innerHTML = "";
    for (const line of vm.events.slice(-30)) feed.append(el("li", {}, line));
  }
}
