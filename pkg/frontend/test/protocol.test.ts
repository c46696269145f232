import { describe, expect, it } from "vitest";
import { encodeCommand, parseServerMessage, ProtocolError } from "../src/protocol.js";
import transcript from "../transcripts/golden.json";

describe("parseServerMessage", () => {
  it("accepts every golden frame", () => {
    for (const f of transcript) {
      const msg = parseServerMessage(JSON.stringify(f));
      expect(msg.type).toBe("frame");
    }
  });

  it("accepts error frames", () => {
    const msg = parseServerMessage(JSON.stringify({ type: "error", reason: "nope" }));
    expect(msg).toEqual({ type: "error", reason: "nope" });
  });

  it("rejects garbage and truncated frames", () => {
    expect(() => parseServerMessage("{oops")).toThrow(ProtocolError);
    expect(() => parseServerMessage(JSON.stringify({ type: "frame" }))).toThrow(ProtocolError);
    expect(() =>
      parseServerMessage(JSON.stringify({ type: "frame", bodies: [{ name: "torso", x: "NaN" }] })),
    ).toThrow(ProtocolError);
    expect(() => parseServerMessage(JSON.stringify({ type: "mystery" }))).toThrow(ProtocolError);
  });
});

describe("encodeCommand", () => {
  it("round-trips plain commands", () => {
    expect(JSON.parse(encodeCommand({ type: "set_alpha", value: 0.5 }))).toEqual({
      type: "set_alpha",
      value: 0.5,
    });
    expect(JSON.parse(encodeCommand({ type: "pause" }))).toEqual({ type: "pause" });
  });

  it("rejects out-of-range values", () => {
    expect(() => encodeCommand({ type: "set_alpha", value: 1.5 })).toThrow(ProtocolError);
    expect(() => encodeCommand({ type: "set_target", dir: 0 as never, speed: 1 })).toThrow(
      ProtocolError,
    );
  });
});
