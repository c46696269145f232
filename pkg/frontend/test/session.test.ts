import { describe, expect, it } from "vitest";
import type { SocketLike } from "../src/session.js";
import { Session } from "../src/session.js";
import transcript from "../transcripts/golden.json";

class FakeSocket implements SocketLike {
  sent: string[] = [];
  onopen: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: string }) => void) | null = null;
  onclose: ((ev?: unknown) => void) | null = null;
  onerror: ((ev?: unknown) => void) | null = null;
  send(data: string) {
    this.sent.push(data);
  }
  close() {
    this.onclose?.();
  }
}

function makeSession(): { session: Session; sock: FakeSocket } {
  const sock = new FakeSocket();
  let t = 0;
  const session = new Session("ws://test", () => sock, () => (t += 1000));
  sock.onopen?.();
  return { session, sock };
}

describe("Session", () => {
  it("one gesture -> exactly one outbound protocol message", () => {
    const { session, sock } = makeSession();
    session.send({ type: "set_alpha", value: 0.5 });
    expect(sock.sent).toEqual([JSON.stringify({ type: "set_alpha", value: 0.5 })]);
    session.send({ type: "reset" });
    expect(sock.sent.length).toBe(2);
  });

  it("latest-frame-wins and reward strip tracks every frame", () => {
    const { session, sock } = makeSession();
    for (const f of transcript) {
      sock.onmessage?.({ data: JSON.stringify(f) });
    }
    expect(session.frameCount).toBe(transcript.length);
    expect(session.latest?.tick).toBe((transcript as { tick: number }[])[transcript.length - 1].tick);
    expect(session.rewardHistory.length).toBe(transcript.length);
  });

  it("malformed frames surface as errors without killing the session", () => {
    const { session, sock } = makeSession();
    sock.onmessage?.({ data: "{broken" });
    sock.onmessage?.({ data: JSON.stringify({ type: "error", reason: "bad command" }) });
    sock.onmessage?.({ data: JSON.stringify(transcript[0]) });
    expect(session.errors.length).toBe(2);
    expect(session.frameCount).toBe(1);
  });

  it("reconnects with backoff after disconnect", async () => {
    const socks: FakeSocket[] = [];
    const session = new Session("ws://test", () => {
      const s = new FakeSocket();
      socks.push(s);
      return s;
    });
    socks[0].onopen?.();  // resets the backoff to its base value
    session.retryDelayMs = 1;
    expect(session.state).toBe("open");
    socks[0].close();
    expect(session.state).toBe("closed");
    await new Promise((r) => setTimeout(r, 30));
    expect(socks.length).toBeGreaterThan(1);
    session.close();
  });
});
