/** Wire protocol spoken by the demo-collection service. */

export enum OptionId {
  ATTACK = 0,
  FLANK = 1,
  AVOID = 2,
  RETREAT = 3,
  GUARD = 4,
  TAG = 5,
  NO_OP = 6,
}

export const OPTION_NAMES: Record<OptionId, string> = {
  [OptionId.ATTACK]: "attack",
  [OptionId.FLANK]: "flank",
  [OptionId.AVOID]: "avoid",
  [OptionId.RETREAT]: "retreat",
  [OptionId.GUARD]: "guard",
  [OptionId.TAG]: "tag",
  [OptionId.NO_OP]: "no_op",
};

export type Team = "blue" | "red";

export interface AgentView {
  id: number;
  team: Team;
  x: number;
  y: number;
  heading: number;
  tagged: boolean;
  has_flag: boolean;
  cooldown: number;
}

export interface FlagView {
  x: number;
  y: number;
  taken: boolean;
}

export interface StateMessage {
  type: "state";
  tick: number;
  agents: AgentView[];
  flags: Record<Team, FlagView>;
  score: Record<Team, number>;
  options_active: Record<string, number>;
}

export interface EndMessage {
  type: "end";
  eta: number;
  psi: number;
  file: string;
}

export interface ErrorMessage {
  type: "error";
  error: string;
}

export type ServerMessage = StateMessage | EndMessage | ErrorMessage;

export interface OptionMessage {
  type: "option";
  agent_id: number;
  option: OptionId;
}

export interface ControlMessage {
  type: "control";
  cmd: "start" | "pause" | "reset";
}

export type ClientMessage = OptionMessage | ControlMessage;

function isAgent(a: unknown): a is AgentView {
  if (typeof a !== "object" || a === null) return false;
  const v = a as Record<string, unknown>;
  return (
    typeof v.id === "number" &&
    (v.team === "blue" || v.team === "red") &&
    typeof v.x === "number" &&
    typeof v.y === "number" &&
    typeof v.heading === "number" &&
    typeof v.tagged === "boolean" &&
    typeof v.has_flag === "boolean" &&
    typeof v.cooldown === "number"
  );
}

/** Parse one raw server frame; throws on anything malformed. */
export function parseServerMessage(raw: string): ServerMessage {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    throw new Error("not valid JSON");
  }
  if (typeof data !== "object" || data === null) {
    throw new Error("message is not an object");
  }
  const msg = data as Record<string, unknown>;
  if (msg.type === "error") {
    if (typeof msg.error !== "string") throw new Error("error frame without text");
    return { type: "error", error: msg.error };
  }
  if (msg.type === "end") {
    if (typeof msg.eta !== "number" || typeof msg.psi !== "number" ||
        typeof msg.file !== "string") {
      throw new Error("end frame missing eta/psi/file");
    }
    return { type: "end", eta: msg.eta, psi: msg.psi, file: msg.file };
  }
  if (msg.type === "state") {
    if (typeof msg.tick !== "number") throw new Error("state frame without tick");
    if (!Array.isArray(msg.agents) || !msg.agents.every(isAgent)) {
      throw new Error("state frame with malformed agents");
    }
    const flags = msg.flags as Record<string, unknown> | null;
    if (typeof flags !== "object" || flags === null ||
        !("blue" in flags) || !("red" in flags)) {
      throw new Error("state frame without both flags");
    }
    const score = msg.score as Record<string, unknown> | null;
    if (typeof score !== "object" || score === null ||
        typeof score.blue !== "number" || typeof score.red !== "number") {
      throw new Error("state frame without score");
    }
    if (typeof msg.options_active !== "object" || msg.options_active === null) {
      throw new Error("state frame without options_active");
    }
    return msg as unknown as StateMessage;
  }
  throw new Error(`unknown message type ${String(msg.type)}`);
}

export function encodeClientMessage(msg: ClientMessage): string {
  return JSON.stringify(msg);
}
