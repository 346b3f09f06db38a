import { describe, expect, it } from "vitest";

import { Snapshot, parseServerMessage } from "../src/protocol.js";
import { awareFraction, dispatchClick, ingest, newViewModel, perimeterRatio,
         pushSample } from "../src/viewmodel.js";

function snap(partial: Partial<Snapshot> = {}): Snapshot {
  return {
    side: 10,
    agents: [
      { id: 0, q: 5, r: 5, state: "AW" },
      { id: 1, q: 6, r: 5, state: "A0" },
      { id: 2, q: 1, r: 1, state: "U" },
    ],
    food: [{ q: 5, r: 5 }],
    lambda: 4,
    tick: 100,
    ...partial,
  };
}

describe("ingest", () => {
  it("stores snapshots and feeds the sparklines", () => {
    const view = newViewModel();
    ingest(view, { kind: "snapshot", snapshot: snap() });
    expect(view.snapshot?.tick).toBe(100);
    expect(view.awareSpark.values).toHaveLength(1);
    expect(view.awareSpark.values[0]).toBeCloseTo(2 / 3);
    expect(view.alphaSpark.values).toHaveLength(1);
  });

  it("acks clear the matching pending mark", () => {
    const view = newViewModel();
    ingest(view, { kind: "snapshot", snapshot: snap() });
    const cmd = dispatchClick(view, { q: 2, r: 2 });
    expect(cmd?.type).toBe("place_food");
    expect(view.pending.size).toBe(1);
    ingest(view, parseServerMessage(`{"type":"ack","cmd_id":${cmd!.cmd_id}}`));
    expect(view.pending.size).toBe(0);
  });

  it("errors raise a toast and clear the pending mark", () => {
    const view = newViewModel();
    ingest(view, { kind: "snapshot", snapshot: snap() });
    const cmd = dispatchClick(view, { q: 2, r: 2 });
    ingest(view, parseServerMessage(
      `{"type":"error","msg":"nope","cmd_id":${cmd!.cmd_id}}`));
    expect(view.toast).toBe("nope");
    expect(view.pending.size).toBe(0);
  });
});

describe("dispatchClick", () => {
  it("place on an occupied food site is a hint, not a command", () => {
    const view = newViewModel();
    ingest(view, { kind: "snapshot", snapshot: snap() });
    expect(dispatchClick(view, { q: 5, r: 5 })).toBeNull();
    expect(view.toast).toContain("already");
  });

  it("remove on a bare site is a hint, not a command", () => {
    const view = newViewModel();
    view.tool = "remove";
    ingest(view, { kind: "snapshot", snapshot: snap() });
    expect(dispatchClick(view, { q: 2, r: 2 })).toBeNull();
    expect(view.toast).toContain("no food");
  });

  it("shift takes two clicks: source food, then target", () => {
    const view = newViewModel();
    view.tool = "shift";
    ingest(view, { kind: "snapshot", snapshot: snap() });
    expect(dispatchClick(view, { q: 5, r: 5 })).toBeNull();   // origin picked
    const cmd = dispatchClick(view, { q: 7, r: 7 });
    expect(cmd).toEqual({ type: "shift_food", from: [5, 5], to: [7, 7], cmd_id: 1 });
  });

  it("shift source must hold food", () => {
    const view = newViewModel();
    view.tool = "shift";
    ingest(view, { kind: "snapshot", snapshot: snap() });
    expect(dispatchClick(view, { q: 2, r: 2 })).toBeNull();
    expect(view.shiftOrigin).toBeNull();
  });
});

describe("metrics", () => {
  it("aware fraction counts non-U states", () => {
    expect(awareFraction(snap())).toBeCloseTo(2 / 3);
  });

  it("perimeter ratio for a lone witness cell is 6/6", () => {
    const s = snap({
      agents: [{ id: 0, q: 5, r: 5, state: "AW" }],
      food: [{ q: 5, r: 5 }],
    });
    expect(perimeterRatio(s)).toBeCloseTo(1.0);
  });

  it("perimeter ratio is null without a witness", () => {
    const s = snap({ food: [] });
    expect(perimeterRatio(s)).toBeNull();
  });

  it("spark buffers stay bounded", () => {
    const buf = { values: [] as number[], capacity: 5 };
    for (let i = 0; i < 20; i++) pushSample(buf, i);
    expect(buf.values).toEqual([15, 16, 17, 18, 19]);
  });
});
