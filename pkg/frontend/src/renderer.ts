// Immediate-mode canvas drawing of the lattice.  One path per cell per
// frame; thousands of cells stay comfortably under a frame budget, which is
// why this is a canvas and not a DOM grid.

import { fitLayout, axialToPixel, hexCorners, Layout } from "./hex.js";
import { StateTag, Snapshot } from "./protocol.js";
import { SparkBuffer, ViewModel } from "./viewmodel.js";

// Color legend: Unaware yellow, Aware red (darker with an alert token),
// all-clear purple, food green.
export const STATE_COLORS: Record<StateTag, string> = {
  U: "#e8c43a",
  A0: "#d8504a",
  AA: "#8f1d1d",
  AW: "#d8504a",
  AAW: "#8f1d1d",
  AC: "#8e44ad",
};

export const FOOD_COLOR = "#2e9e5b";
export const EMPTY_COLOR = "#23262d";
export const PENDING_COLOR = "#6fc3ff";

export function colorFor(state: StateTag): string {
  return STATE_COLORS[state];
}

export function layoutFor(snap: Snapshot, width: number, height: number): Layout {
  return fitLayout(snap.side, width, height);
}

export function render(view: ViewModel, canvas: HTMLCanvasElement): void {
  const ctx = canvas.getContext("2d");
  if (ctx === null) return;
  ctx.fillStyle = "#14161b";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  const snap = view.snapshot;
  if (snap === null) {
    ctx.fillStyle = "#888";
    ctx.font = "16px sans-serif";
    ctx.fillText(view.connected ? "waiting for the first snapshot" : "disconnected", 20, 30);
    return;
  }
  const layout = layoutFor(snap, canvas.width, canvas.height - 60);

  const occupied = new Map<string, StateTag>();
  for (const a of snap.agents) occupied.set(`${a.q},${a.r}`, a.state);
  const foodKeys = new Set(snap.food.map((f) => `${f.q},${f.r}`));
  const pendingKeys = new Set<string>();
  for (const site of view.pending.values()) pendingKeys.add(`${site.q},${site.r}`);

  for (let q = 0; q < snap.side; q++) {
    for (let r = 0; r < snap.side; r++) {
      const { x, y } = axialToPixel(q, r, layout);
      const key = `${q},${r}`;
      const state = occupied.get(key);
      drawCell(ctx, x, y, layout.size * 0.95, state ? colorFor(state) : EMPTY_COLOR);
      if (foodKeys.has(key)) {
        ctx.beginPath();
        ctx.arc(x, y, layout.size * 0.35, 0, 2 * Math.PI);
        ctx.fillStyle = FOOD_COLOR;
        ctx.fill();
      }
      if (pendingKeys.has(key)) {
        ctx.beginPath();
        ctx.arc(x, y, layout.size * 0.55, 0, 2 * Math.PI);
        ctx.strokeStyle = PENDING_COLOR;
        ctx.lineWidth = 2;
        ctx.stroke();
      }
    }
  }

  // status strip: tick, lambda, tool, toast, sparklines
  const base = canvas.height - 50;
  ctx.fillStyle = "#ccc";
  ctx.font = "13px monospace";
  ctx.fillText(`tick ${snap.tick.toLocaleString()}   lambda ${snap.lambda}   tool ${view.tool}`, 12, base + 14);
  if (view.toast !== null) {
    ctx.fillStyle = "#ff9c6b";
    ctx.fillText(view.toast, 12, base + 32);
  }
  drawSpark(ctx, view.awareSpark, canvas.width - 300, base, 130, 40, "#d8504a", "aware");
  drawSpark(ctx, view.alphaSpark, canvas.width - 150, base, 130, 40, "#6fc3ff", "alpha");
}

function drawCell(ctx: CanvasRenderingContext2D, x: number, y: number, size: number, fill: string): void {
  const pts = hexCorners(x, y, size);
  ctx.beginPath();
  ctx.moveTo(pts[0][0], pts[0][1]);
  for (let i = 1; i < 6; i++) ctx.lineTo(pts[i][0], pts[i][1]);
  ctx.closePath();
  ctx.fillStyle = fill;
  ctx.fill();
}

/** Normalized polyline for a sparkline buffer inside a w x h box. */
export function sparkPath(buf: SparkBuffer, w: number, h: number): Array<[number, number]> {
  const vals = buf.values;
  if (vals.length < 2) return [];
  let lo = Math.min(...vals);
  let hi = Math.max(...vals);
  if (hi - lo < 1e-9) {
    lo -= 0.5;
    hi += 0.5;
  }
  return vals.map((v, i) => [
    (i / (vals.length - 1)) * w,
    h - ((v - lo) / (hi - lo)) * h,
  ]);
}

function drawSpark(ctx: CanvasRenderingContext2D, buf: SparkBuffer, x: number, y: number,
                   w: number, h: number, color: string, label: string): void {
  ctx.strokeStyle = "#444";
  ctx.strokeRect(x, y, w, h);
  ctx.fillStyle = "#888";
  ctx.font = "10px monospace";
  ctx.fillText(label, x + 2, y - 2);
  const path = sparkPath(buf, w, h);
  if (path.length === 0) return;
  ctx.beginPath();
  ctx.moveTo(x + path[0][0], y + path[0][1]);
  for (const [px, py] of path) ctx.lineTo(x + px, y + py);
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.5;
  ctx.stroke();
}
