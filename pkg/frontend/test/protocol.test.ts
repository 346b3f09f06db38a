import { describe, expect, it } from "vitest";

import { encodeCommand, parseServerMessage } from "../src/protocol.js";

const snapshotFrame = JSON.stringify({
  side: 8,
  agents: [{ id: 0, q: 1, r: 2, state: "AA" }, { id: 1, q: 3, r: 3, state: "U" }],
  food: [{ q: 4, r: 4 }],
  lambda: 4.0,
  tick: 12000,
});

describe("parseServerMessage", () => {
  it("classifies snapshots", () => {
    const msg = parseServerMessage(snapshotFrame);
    expect(msg.kind).toBe("snapshot");
    if (msg.kind === "snapshot") {
      expect(msg.snapshot.side).toBe(8);
      expect(msg.snapshot.agents[0].state).toBe("AA");
      expect(msg.snapshot.tick).toBe(12000);
    }
  });

  it("classifies acks and errors", () => {
    expect(parseServerMessage('{"type":"ack","cmd_id":7}')).toEqual(
      { kind: "ack", frame: { type: "ack", cmd_id: 7 } });
    const err = parseServerMessage('{"type":"error","msg":"site (99,99) outside","cmd_id":3}');
    expect(err.kind).toBe("error");
    if (err.kind === "error") expect(err.frame.msg).toContain("outside");
  });

  it("rejects malformed frames", () => {
    expect(() => parseServerMessage('{"side": 8}')).toThrow();
    expect(() => parseServerMessage('{"type":"error"}')).toThrow();
    const badState = JSON.parse(snapshotFrame);
    badState.agents[0].state = "XX";
    expect(() => parseServerMessage(JSON.stringify(badState))).toThrow();
    expect(() => parseServerMessage("[1,2,3]")).toThrow();
  });
});

describe("encodeCommand", () => {
  it("serializes the exact wire shape", () => {
    expect(JSON.parse(encodeCommand({ type: "place_food", q: 3, r: 5, cmd_id: 1 })))
      .toEqual({ type: "place_food", q: 3, r: 5, cmd_id: 1 });
    expect(JSON.parse(encodeCommand(
      { type: "shift_food", from: [1, 2], to: [3, 4], cmd_id: 2 })))
      .toEqual({ type: "shift_food", from: [1, 2], to: [3, 4], cmd_id: 2 });
    expect(JSON.parse(encodeCommand({ type: "set_lambda", value: 2.5, cmd_id: 3 })))
      .toEqual({ type: "set_lambda", value: 2.5, cmd_id: 3 });
  });
});
