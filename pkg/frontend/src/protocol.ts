// Wire types for the simulation server's JSON protocol, plus validation.

export interface BodyPose {
  name: string;
  x: number;
  y: number;
  angle: number;
  length: number;
}

export interface Frame {
  type: "frame";
  t: number;
  tick: number;
  bodies: BodyPose[];
  goal: { dir: number; speed: number; dist: number };
  alpha: number;
  active_adapters: string[];
  blend_alpha: number;
  rewards: { goal: number; imitation: number };
  paused: boolean;
  terrain: { x: number[]; h: number[] };
}

export interface ErrorFrame {
  type: "error";
  reason: string;
}

export type ServerMessage = Frame | ErrorFrame;

export type Command =
  | { type: "set_target"; dir: 1 | -1; speed: number }
  | { type: "set_alpha"; value: number }
  | { type: "select_adapters"; names: string[]; blend_alpha: number }
  | { type: "perturb"; force: number; duration: number; angle?: number }
  | { type: "pause" }
  | { type: "resume" }
  | { type: "reset" };

export class ProtocolError extends Error {}

function isNum(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

export function parseServerMessage(raw: string): ServerMessage {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    throw new ProtocolError("not valid JSON");
  }
  const msg = data as Record<string, unknown>;
  if (msg?.type === "error") {
    if (typeof msg.reason !== "string") throw new ProtocolError("error frame without reason");
    return { type: "error", reason: msg.reason };
  }
  if (msg?.type !== "frame") throw new ProtocolError(`unknown server message: ${String(msg?.type)}`);
  if (!Array.isArray(msg.bodies) || msg.bodies.length === 0) {
    throw new ProtocolError("frame without bodies");
  }
  for (const b of msg.bodies as Record<string, unknown>[]) {
    if (!isNum(b.x) || !isNum(b.y) || !isNum(b.angle) || typeof b.name !== "string") {
      throw new ProtocolError("malformed body pose");
    }
  }
  const goal = msg.goal as Record<string, unknown> | undefined;
  if (!goal || !isNum(goal.dir) || !isNum(goal.speed) || !isNum(goal.dist)) {
    throw new ProtocolError("frame without goal");
  }
  if (!isNum(msg.alpha)) throw new ProtocolError("frame without alpha");
  return msg as unknown as Frame;
}

export function encodeCommand(cmd: Command): string {
  if (cmd.type === "set_alpha" && (cmd.value < 0 || cmd.value > 1)) {
    throw new ProtocolError("alpha must lie in [0, 1]");
  }
  if (cmd.type === "set_target" && cmd.dir !== 1 && cmd.dir !== -1) {
    throw new ProtocolError("target dir must be +1 or -1");
  }
  return JSON.stringify(cmd);
}
