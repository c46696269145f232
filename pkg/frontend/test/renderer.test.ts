import { describe, expect, it } from "vitest";
import { parseServerMessage, type Frame } from "../src/protocol.js";
import { RecordingCtx, render, type View } from "../src/renderer.js";
import transcript from "../transcripts/golden.json";

const view: View = { width: 960, height: 420, metersPerPixel: 0.01 };

function replay(): string[] {
  const calls: string[] = [];
  for (const raw of transcript) {
    const frame = parseServerMessage(JSON.stringify(raw)) as Frame;
    const ctx = new RecordingCtx();
    render(frame, ctx, view);
    calls.push(ctx.calls.join(";"));
  }
  return calls;
}

describe("golden transcript replay", () => {
  it("renders every frame without error", () => {
    const calls = replay();
    expect(calls.length).toBe(transcript.length);
    for (const c of calls) {
      expect(c.startsWith("clearRect")).toBe(true);
      expect(c).toContain("stroke");
    }
  });

  it("is deterministic: identical draw-call sequences on re-replay", () => {
    expect(replay()).toEqual(replay());
  });

  it("draws one capsule per body plus terrain and goal", () => {
    const frame = parseServerMessage(JSON.stringify(transcript[0])) as Frame;
    const ctx = new RecordingCtx();
    render(frame, ctx, view);
    const strokes = ctx.calls.filter((c) => c === "stroke()").length;
    // terrain + one per body
    expect(strokes).toBe(1 + frame.bodies.length);
    expect(ctx.calls.some((c) => c.startsWith("fillText"))).toBe(true);
  });
});
