// Wire types for the live session: snapshots in, commands out.
// This file is the single source of truth for what crosses the socket;
// everything else in the console works on these shapes.

export type StateTag = "U" | "A0" | "AA" | "AW" | "AAW" | "AC";

export interface AgentDto {
  id: number;
  q: number;
  r: number;
  state: StateTag;
}

export interface Snapshot {
  side: number;
  agents: AgentDto[];
  food: { q: number; r: number }[];
  lambda: number;
  tick: number;
}

export interface AckFrame {
  type: "ack";
  cmd_id: number | null;
}

export interface ErrorFrame {
  type: "error";
  msg: string;
  cmd_id?: number | null;
}

export type ServerMessage =
  | { kind: "snapshot"; snapshot: Snapshot }
  | { kind: "ack"; frame: AckFrame }
  | { kind: "error"; frame: ErrorFrame };

export type Command =
  | { type: "place_food"; q: number; r: number; cmd_id: number }
  | { type: "remove_food"; q: number; r: number; cmd_id: number }
  | { type: "shift_food"; from: [number, number]; to: [number, number]; cmd_id: number }
  | { type: "pause"; cmd_id: number }
  | { type: "resume"; cmd_id: number }
  | { type: "set_speed"; ips: number; cmd_id: number }
  | { type: "set_lambda"; value: number; cmd_id: number }
  | { type: "set_seed_reset"; seed: number; cmd_id: number };

const STATE_TAGS: ReadonlySet<string> = new Set(["U", "A0", "AA", "AW", "AAW", "AC"]);

/** Classify and validate one incoming frame; throws on malformed payloads. */
export function parseServerMessage(raw: string): ServerMessage {
  const data = JSON.parse(raw);
  if (typeof data !== "object" || data === null) {
    throw new Error("frame is not an object");
  }
  if (data.type === "ack") {
    return { kind: "ack", frame: { type: "ack", cmd_id: data.cmd_id ?? null } };
  }
  if (data.type === "error") {
    if (typeof data.msg !== "string") throw new Error("error frame without msg");
    return { kind: "error", frame: { type: "error", msg: data.msg, cmd_id: data.cmd_id ?? null } };
  }
  if (typeof data.side !== "number" || !Array.isArray(data.agents) || !Array.isArray(data.food)) {
    throw new Error("snapshot frame missing side/agents/food");
  }
  for (const a of data.agents) {
    if (typeof a.id !== "number" || typeof a.q !== "number" || typeof a.r !== "number"
        || !STATE_TAGS.has(a.state)) {
      throw new Error(`malformed agent entry ${JSON.stringify(a)}`);
    }
  }
  for (const f of data.food) {
    if (typeof f.q !== "number" || typeof f.r !== "number") {
      throw new Error(`malformed food entry ${JSON.stringify(f)}`);
    }
  }
  if (typeof data.lambda !== "number" || typeof data.tick !== "number") {
    throw new Error("snapshot frame missing lambda/tick");
  }
  return { kind: "snapshot", snapshot: data as Snapshot };
}

export function encodeCommand(cmd: Command): string {
  return JSON.stringify(cmd);
}
