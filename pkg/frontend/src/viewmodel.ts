// Console state: the latest snapshot plus tool/pending/toast bookkeeping.
// Rendering is a pure function of this state; the only thing that ever
// leaves the console is a protocol command.

import { Command, Snapshot, ServerMessage } from "./protocol.js";
import { DIRECTIONS } from "./hex.js";

export type Tool = "place" | "remove" | "shift";

export interface SparkBuffer {
  values: number[];
  capacity: number;
}

export function pushSample(buf: SparkBuffer, v: number): void {
  buf.values.push(v);
  if (buf.values.length > buf.capacity) {
    buf.values.splice(0, buf.values.length - buf.capacity);
  }
}

export interface ViewModel {
  snapshot: Snapshot | null;
  connected: boolean;
  tool: Tool;
  shiftOrigin: { q: number; r: number } | null;
  pending: Map<number, { q: number; r: number }>;
  nextCmdId: number;
  toast: string | null;
  awareSpark: SparkBuffer;
  alphaSpark: SparkBuffer;
}

export function newViewModel(): ViewModel {
  return {
    snapshot: null,
    connected: false,
    tool: "place",
    shiftOrigin: null,
    pending: new Map(),
    nextCmdId: 1,
    toast: null,
    awareSpark: { values: [], capacity: 240 },
    alphaSpark: { values: [], capacity: 240 },
  };
}

export function awareFraction(snap: Snapshot): number {
  if (snap.agents.length === 0) return 0;
  let aware = 0;
  for (const a of snap.agents) if (a.state !== "U") aware++;
  return aware / snap.agents.length;
}

/**
 * Perimeter ratio of the witness cluster, computed on the torus: boundary =
 * aware-occupied/empty-or-unaware adjacencies of the cluster, normalized by
 * the minimum boundary for the cluster size (6k - 2*floor(3k - sqrt(12k-3))).
 * Interior cavities count toward the boundary here; good enough for a trend
 * sparkline.
 */
export function perimeterRatio(snap: Snapshot): number | null {
  const side = snap.side;
  const key = (q: number, r: number) => ((q % side) + side) % side * side + ((r % side) + side) % side;
  const awareAt = new Map<number, boolean>();
  for (const a of snap.agents) awareAt.set(key(a.q, a.r), a.state !== "U");
  const foodKeys = new Set(snap.food.map((f) => key(f.q, f.r)));
  // witnesses: aware agents standing on food
  const seeds: number[] = [];
  for (const a of snap.agents) {
    if (a.state !== "U" && foodKeys.has(key(a.q, a.r))) seeds.push(key(a.q, a.r));
  }
  if (seeds.length === 0) return null;
  const cluster = new Set<number>(seeds);
  const stack = [...seeds];
  const neighborKeys = (k: number): number[] => {
    const q = Math.floor(k / side);
    const r = k % side;
    return DIRECTIONS.map(([dq, dr]) => key(q + dq, r + dr));
  };
  while (stack.length > 0) {
    const k = stack.pop()!;
    for (const nb of neighborKeys(k)) {
      if (awareAt.get(nb) === true && !cluster.has(nb)) {
        cluster.add(nb);
        stack.push(nb);
      }
    }
  }
  let boundary = 0;
  for (const k of cluster) {
    for (const nb of neighborKeys(k)) {
      if (!cluster.has(nb)) boundary++;
    }
  }
  const k = cluster.size;
  const pMin = 6 * k - 2 * Math.floor(3 * k - Math.sqrt(12 * k - 3));
  return boundary / pMin;
}

export function ingest(view: ViewModel, msg: ServerMessage): void {
  if (msg.kind === "snapshot") {
    view.snapshot = msg.snapshot;
    pushSample(view.awareSpark, awareFraction(msg.snapshot));
    const ratio = perimeterRatio(msg.snapshot);
    if (ratio !== null) pushSample(view.alphaSpark, ratio);
    // pending marks resolve once the snapshot shows (or no longer shows) food
    return;
  }
  if (msg.kind === "ack") {
    if (msg.frame.cmd_id !== null) view.pending.delete(msg.frame.cmd_id);
    return;
  }
  view.toast = msg.frame.msg;
  if (msg.frame.cmd_id != null) view.pending.delete(msg.frame.cmd_id);
}

/**
 * Turn a click on a lattice site into the outgoing command for the selected
 * tool.  Returns null when the click is a no-op (e.g. remove on a bare site
 * or the first half of a shift); the state machine advances either way.
 */
export function dispatchClick(view: ViewModel, site: { q: number; r: number }): Command | null {
  if (view.snapshot === null) return null;
  const hasFood = view.snapshot.food.some((f) => f.q === site.q && f.r === site.r);
  if (view.tool === "place") {
    if (hasFood) {
      view.toast = "food is already there";
      return null;
    }
    const cmd_id = view.nextCmdId++;
    view.pending.set(cmd_id, site);
    return { type: "place_food", q: site.q, r: site.r, cmd_id };
  }
  if (view.tool === "remove") {
    if (!hasFood) {
      view.toast = "no food on that site";
      return null;
    }
    const cmd_id = view.nextCmdId++;
    view.pending.set(cmd_id, site);
    return { type: "remove_food", q: site.q, r: site.r, cmd_id };
  }
  // shift: first click picks the source (must be food), second the target
  if (view.shiftOrigin === null) {
    if (!hasFood) {
      view.toast = "pick a food site to shift";
      return null;
    }
    view.shiftOrigin = site;
    return null;
  }
  const from = view.shiftOrigin;
  view.shiftOrigin = null;
  const cmd_id = view.nextCmdId++;
  view.pending.set(cmd_id, site);
  return { type: "shift_food", from: [from.q, from.r], to: [site.q, site.r], cmd_id };
}
