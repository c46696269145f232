// Outbound command rate limiting: rapid gestures of the same kind coalesce
// to the latest value, flushed at most once per control period.

import type { Command } from "./protocol.js";
import { encodeCommand } from "./protocol.js";

export class CommandCoalescer {
  private pending = new Map<string, Command>();
  private lastFlush = new Map<string, number>();

  constructor(
    private send: (encoded: string) => void,
    private minIntervalMs = 1000 / 30,
    private now: () => number = () => Date.now(),
  ) {}

  /** Queue a command; coalescable kinds flush at most once per interval. */
  submit(cmd: Command): void {
    const t = this.now();
    const last = this.lastFlush.get(cmd.type) ?? -Infinity;
    if (t - last >= this.minIntervalMs) {
      this.send(encodeCommand(cmd));
      this.lastFlush.set(cmd.type, t);
      this.pending.delete(cmd.type);
    } else {
      this.pending.set(cmd.type, cmd);
    }
  }

  /** Flush any coalesced commands whose interval has elapsed. */
  flush(): void {
    const t = this.now();
    for (const [kind, cmd] of [...this.pending]) {
      const last = this.lastFlush.get(kind) ?? -Infinity;
      if (t - last >= this.minIntervalMs) {
        this.send(encodeCommand(cmd));
        this.lastFlush.set(kind, t);
        this.pending.delete(kind);
      }
    }
  }
}
