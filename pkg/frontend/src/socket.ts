// One WebSocket to the orchestrator with hello-on-open and backoff
// reconnect. Decoding happens here; the app only ever sees actions.

import { decode, encode, PROTOCOL_VERSION, type Command, type Message, type Role } from "./protocol.js";

export interface SocketEvents {
  onOpen(): void;
  onMessage(msg: Message): void;
  onDecodeError(detail: string): void;
  onClose(): void;
}

export class ConsoleSocket {
  private ws: WebSocket | null = null;
  private attempts = 0;
  private closedByUs = false;

  constructor(
    private url: string,
    private role: Role,
    private sessionId: string | undefined,
    private events: SocketEvents,
  ) {}

  connect(): void {
    this.closedByUs = false;
    this.ws = new WebSocket(this.url);
    this.ws.onopen = () => {
      this.attempts = 0;
      this.send({
        type: "hello",
        role: this.role,
        protocol_version: PROTOCOL_VERSION,
        ...(this.sessionId ? { session_id: this.sessionId } : {}),
      });
      this.send({ type: "ping", t0_ms: Date.now() });
      this.events.onOpen();
    };
    this.ws.onmessage = (ev) => {
      try {
        this.events.onMessage(decode(String(ev.data)));
      } catch (exc) {
        this.events.onDecodeError(String(exc));
      }
    };
    this.ws.onclose = () => {
      this.ws = null;
      this.events.onClose();
      if (!this.closedByUs) this.reconnect();
    };
  }

  private reconnect(): void {
    const delay = Math.min(500 * 2 ** this.attempts, 10_000);
    this.attempts += 1;
    setTimeout(() => {
      if (!this.closedByUs) this.connect();
    }, delay);
  }

  send(msg: Message): boolean {
    if (!this.ws || this.ws.readyState !== WebSocket.OPEN) return false;
    this.ws.send(encode(msg));
    return true;
  }

  sendCommand(command: Command): boolean {
    return this.send({ type: "command", command });
  }

  close(): void {
    this.closedByUs = true;
    this.ws?.close();
  }
}
