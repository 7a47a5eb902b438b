import { AgentView, StateMessage } from "../src/protocol.js";

export function agent(partial: Partial<AgentView> & { id: number }): AgentView {
  return {
    team: "blue",
    x: 80,
    y: 40,
    heading: 0,
    tagged: false,
    has_flag: false,
    cooldown: 0,
    ...partial,
  };
}

export function stateMessage(partial: Partial<StateMessage> = {}): StateMessage {
  return {
    type: "state",
    tick: 1,
    agents: [
      agent({ id: 0, team: "blue", x: 150, y: 30 }),
      agent({ id: 1, team: "blue", x: 150, y: 50 }),
      agent({ id: 2, team: "red", x: 10, y: 30 }),
      agent({ id: 3, team: "red", x: 10, y: 50 }),
    ],
    flags: {
      blue: { x: 150, y: 40, taken: false },
      red: { x: 10, y: 40, taken: false },
    },
    score: { blue: 0, red: 0 },
    options_active: { "0": 6, "1": 6 },
    ...partial,
  };
}
