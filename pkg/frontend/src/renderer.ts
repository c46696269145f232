// Pure frame renderer: turns one server frame into canvas draw calls.
// Keeping this free of DOM state means a recorded transcript replays into an
// identical draw-call sequence, which the tests snapshot.

import type { Frame } from "./protocol.js";

export interface Ctx2D {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
  set lineWidth(v: number);
  set strokeStyle(v: string);
  set fillStyle(v: string);
}

export interface View {
  width: number;
  height: number;
  metersPerPixel: number;
}

const LINK_COLORS: Record<string, string> = {
  torso: "#2b4b77",
  l_thigh: "#3f7fb5",
  l_shin: "#62a0cf",
  l_foot: "#8cc0e8",
  r_thigh: "#b5633f",
  r_shin: "#cf8a62",
  r_foot: "#e8b48c",
};

function round2(v: number): number {
  return Math.round(v * 100) / 100;
}

export function worldToScreen(view: View, camX: number, x: number, y: number): [number, number] {
  const sx = view.width / 2 + (x - camX) / view.metersPerPixel;
  const sy = view.height * 0.8 - y / view.metersPerPixel;
  return [round2(sx), round2(sy)];
}

export function render(frame: Frame, ctx: Ctx2D, view: View): void {
  const root = frame.bodies.find((b) => b.name === "torso") ?? frame.bodies[0];
  const camX = root.x;
  ctx.clearRect(0, 0, view.width, view.height);

  // terrain polyline
  ctx.strokeStyle = "#556b2f";
  ctx.lineWidth = 2;
  ctx.beginPath();
  frame.terrain.x.forEach((tx, i) => {
    const [sx, sy] = worldToScreen(view, camX, tx, frame.terrain.h[i]);
    if (i === 0) ctx.moveTo(sx, sy);
    else ctx.lineTo(sx, sy);
  });
  ctx.stroke();

  // goal marker: a flag at the target location
  const goalX = root.x + frame.goal.dir * frame.goal.dist;
  const [gx, gy] = worldToScreen(view, camX, goalX, 0);
  ctx.fillStyle = "#d62728";
  ctx.fillRect(gx - 1, gy - 28, 2, 28);
  ctx.beginPath();
  ctx.moveTo(gx, gy - 28);
  ctx.lineTo(gx + 12, gy - 22);
  ctx.lineTo(gx, gy - 16);
  ctx.fill();

  // links as capsules (line + end caps)
  for (const b of frame.bodies) {
    const axis = b.name.endsWith("_foot") ? 0 : Math.PI / 2;
    const half = (b.length ?? 0.3) / 2;
    const dx = Math.cos(b.angle + axis) * half;
    const dy = Math.sin(b.angle + axis) * half;
    const [x0, y0] = worldToScreen(view, camX, b.x - dx, b.y - dy);
    const [x1, y1] = worldToScreen(view, camX, b.x + dx, b.y + dy);
    ctx.strokeStyle = LINK_COLORS[b.name] ?? "#444";
    ctx.lineWidth = 6;
    ctx.beginPath();
    ctx.moveTo(x0, y0);
    ctx.lineTo(x1, y1);
    ctx.stroke();
    ctx.beginPath();
    ctx.arc(x1, y1, 3, 0, 2 * Math.PI);
    ctx.fill();
  }

  // HUD text
  ctx.fillStyle = "#222";
  ctx.fillText(
    `t=${frame.t.toFixed(2)}s  alpha=${frame.alpha.toFixed(2)}  ` +
      `goal ${frame.goal.dir > 0 ? "+" : "-"}x @ ${frame.goal.speed.toFixed(2)} m/s  ` +
      `r=${frame.rewards.goal.toFixed(2)}${frame.paused ? "  [paused]" : ""}`,
    10,
    18,
  );
}

export class RecordingCtx implements Ctx2D {
  calls: string[] = [];
  private push(name: string, args: unknown[]) {
    this.calls.push(`${name}(${args.map((a) => JSON.stringify(a)).join(",")})`);
  }
  clearRect(...a: [number, number, number, number]) { this.push("clearRect", a); }
  beginPath() { this.push("beginPath", []); }
  moveTo(...a: [number, number]) { this.push("moveTo", a); }
  lineTo(...a: [number, number]) { this.push("lineTo", a); }
  arc(...a: [number, number, number, number, number]) { this.push("arc", a); }
  stroke() { this.push("stroke", []); }
  fill() { this.push("fill", []); }
  fillRect(...a: [number, number, number, number]) { this.push("fillRect", a); }
  fillText(...a: [string, number, number]) { this.push("fillText", a); }
  set lineWidth(v: number) { this.push("lineWidth", [v]); }
  set strokeStyle(v: string) { this.push("strokeStyle", [v]); }
  set fillStyle(v: string) { this.push("fillStyle", [v]); }
}
