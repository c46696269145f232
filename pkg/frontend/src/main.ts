// DOM wiring: canvas, steering controls, adapter sliders, reward strip.

import { render, type View } from "./renderer.js";
import { Session } from "./session.js";
import type { Command } from "./protocol.js";

const params = new URLSearchParams(location.search);
const WS_URL = params.get("ws") ?? `ws://${location.hostname || "localhost"}:8765/ws`;

const canvas = document.getElementById("sim") as HTMLCanvasElement;
const strip = document.getElementById("strip") as HTMLCanvasElement;
const banner = document.getElementById("banner") as HTMLDivElement;
const ctx = canvas.getContext("2d")!;
const stripCtx = strip.getContext("2d")!;
const view: View = { width: canvas.width, height: canvas.height, metersPerPixel: 0.01 };

const session = new Session(WS_URL, (url) => new WebSocket(url) as never);
session.onStateChange = (s) => {
  banner.textContent = s === "open" ? "" : `connection ${s}… retrying`;
  banner.style.display = s === "open" ? "none" : "block";
};

function bind(id: string, make: (el: HTMLInputElement) => Command): void {
  const el = document.getElementById(id) as HTMLInputElement;
  el.addEventListener("input", () => session.send(make(el)));
}

bind("alpha", (el) => ({ type: "set_alpha", value: Number(el.value) }));
bind("speed", (el) => ({
  type: "set_target",
  dir: (document.getElementById("dir") as HTMLInputElement).checked ? -1 : 1,
  speed: Number(el.value),
}));

(document.getElementById("dir") as HTMLInputElement).addEventListener("change", (ev) => {
  const speed = Number((document.getElementById("speed") as HTMLInputElement).value);
  session.send({ type: "set_target", dir: (ev.target as HTMLInputElement).checked ? -1 : 1, speed });
});

for (const [id, cmd] of [
  ["push", { type: "perturb", force: 120, duration: 0.2, angle: 0 }],
  ["pause", { type: "pause" }],
  ["resume", { type: "resume" }],
  ["reset", { type: "reset" }],
] as [string, Command][]) {
  document.getElementById(id)?.addEventListener("click", () => session.send(cmd));
}

const blendInput = document.getElementById("blend") as HTMLInputElement;
const adapterList = document.getElementById("adapters") as HTMLSelectElement;
let adapterNamesSeen = false;

function selectAdapters(): void {
  const names = Array.from(adapterList.selectedOptions).map((o) => o.value);
  session.send({ type: "select_adapters", names, blend_alpha: Number(blendInput.value) });
}
adapterList.addEventListener("change", selectAdapters);
blendInput.addEventListener("input", selectAdapters);

function drawStrip(history: number[]): void {
  stripCtx.clearRect(0, 0, strip.width, strip.height);
  stripCtx.strokeStyle = "#2c7";
  stripCtx.beginPath();
  history.forEach((r, i) => {
    const x = (i / Math.max(1, history.length - 1)) * strip.width;
    const y = strip.height - r * strip.height;
    if (i === 0) stripCtx.moveTo(x, y);
    else stripCtx.lineTo(x, y);
  });
  stripCtx.stroke();
}

function loop(): void {
  const frame = session.latest;
  if (frame) {
    render(frame, ctx as never, view);
    drawStrip(session.rewardHistory);
    if (!adapterNamesSeen && frame.active_adapters.length) {
      for (const name of frame.active_adapters) {
        const opt = document.createElement("option");
        opt.value = name;
        opt.textContent = name;
        opt.selected = true;
        adapterList.appendChild(opt);
      }
      adapterNamesSeen = true;
    }
  }
  session.flush();
  requestAnimationFrame(loop);
}
requestAnimationFrame(loop);
