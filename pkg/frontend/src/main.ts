// Bootstrap: wire the canvas, toolbar and socket together.

import { ConsoleClient } from "./client.js";
import { pixelToAxial, wrap } from "./hex.js";
import { render, layoutFor } from "./renderer.js";
import { Tool, dispatchClick, newViewModel } from "./viewmodel.js";

const canvas = document.getElementById("lattice") as HTMLCanvasElement;
const urlInput = document.getElementById("url") as HTMLInputElement;
const connectBtn = document.getElementById("connect") as HTMLButtonElement;
const speedInput = document.getElementById("speed") as HTMLInputElement;
const lambdaInput = document.getElementById("lambda") as HTMLInputElement;
const pauseBtn = document.getElementById("pause") as HTMLButtonElement;
const resumeBtn = document.getElementById("resume") as HTMLButtonElement;

const view = newViewModel();
let dirty = true;
const client = new ConsoleClient(view, () => {
  dirty = true;
});

function frame(): void {
  if (dirty) {
    render(view, canvas);
    dirty = false;
  }
  requestAnimationFrame(frame);
}
requestAnimationFrame(frame);

connectBtn.onclick = () => client.connect(urlInput.value);

for (const tool of ["place", "remove", "shift"] as Tool[]) {
  const btn = document.getElementById(`tool-${tool}`) as HTMLButtonElement;
  btn.onclick = () => {
    view.tool = tool;
    view.shiftOrigin = null;
    dirty = true;
  };
}

pauseBtn.onclick = () => client.send({ type: "pause", cmd_id: view.nextCmdId++ });
resumeBtn.onclick = () => client.send({ type: "resume", cmd_id: view.nextCmdId++ });
speedInput.onchange = () => {
  const ips = Number(speedInput.value);
  if (ips > 0) client.send({ type: "set_speed", ips, cmd_id: view.nextCmdId++ });
};
lambdaInput.onchange = () => {
  const value = Number(lambdaInput.value);
  if (value > 0) client.send({ type: "set_lambda", value, cmd_id: view.nextCmdId++ });
};

canvas.onclick = (ev) => {
  if (view.snapshot === null) return;
  const rect = canvas.getBoundingClientRect();
  const layout = layoutFor(view.snapshot, canvas.width, canvas.height - 60);
  const { q, r } = pixelToAxial(ev.clientX - rect.left, ev.clientY - rect.top, layout);
  const site = { q: wrap(q, view.snapshot.side), r: wrap(r, view.snapshot.side) };
  client.send(dispatchClick(view, site));
  dirty = true;
};
