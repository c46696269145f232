// WebSocket session: reconnecting client with a latest-frame buffer and a
// reward-history strip. Rendering is decoupled: the UI reads `latest` at its
// own pace; stale frames are simply replaced.

import type { Command, Frame, ServerMessage } from "./protocol.js";
import { parseServerMessage } from "./protocol.js";
import { CommandCoalescer } from "./coalesce.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export type ConnState = "connecting" | "open" | "closed";

export class Session {
  state: ConnState = "connecting";
  latest: Frame | null = null;
  frameCount = 0;
  errors: string[] = [];
  rewardHistory: number[] = [];
  maxHistory = 300;
  retryDelayMs = 500;
  onStateChange: ((s: ConnState) => void) | null = null;

  private sock: SocketLike | null = null;
  private coalescer: CommandCoalescer;
  private closedByUser = false;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private url: string,
    private factory: SocketFactory,
    now?: () => number,
  ) {
    this.coalescer = new CommandCoalescer((s) => this.sock?.send(s), 1000 / 30, now);
    this.connect();
  }

  private setState(s: ConnState) {
    this.state = s;
    this.onStateChange?.(s);
  }

  private connect(): void {
    this.setState("connecting");
    const sock = this.factory(this.url);
    this.sock = sock;
    sock.onopen = () => {
      this.retryDelayMs = 500;
      this.setState("open");
    };
    sock.onmessage = (ev) => this.handleMessage(ev.data);
    sock.onerror = () => {};
    sock.onclose = () => {
      this.setState("closed");
      if (!this.closedByUser) {
        this.retryTimer = setTimeout(() => this.connect(), this.retryDelayMs);
        this.retryDelayMs = Math.min(this.retryDelayMs * 2, 8000);
      }
    };
  }

  handleMessage(raw: string): void {
    let msg: ServerMessage;
    try {
      msg = parseServerMessage(raw);
    } catch (e) {
      this.errors.push(String(e));
      return; // malformed frame: surface the error, keep the session
    }
    if (msg.type === "error") {
      this.errors.push(msg.reason);
      return;
    }
    this.latest = msg; // latest-frame-wins
    this.frameCount += 1;
    this.rewardHistory.push(msg.rewards.goal);
    if (this.rewardHistory.length > this.maxHistory) {
      this.rewardHistory.splice(0, this.rewardHistory.length - this.maxHistory);
    }
  }

  send(cmd: Command): void {
    this.coalescer.submit(cmd);
  }

  flush(): void {
    this.coalescer.flush();
  }

  close(): void {
    this.closedByUser = true;
    if (this.retryTimer) clearTimeout(this.retryTimer);
    this.sock?.close();
  }
}
