/** Single state store serializing network and key events.
 *
 * Option highlights are optimistic: a key press updates the local view and
 * sends one message; the next state frame reconciles. Repeated presses of
 * an already-active option send nothing.
 */

import {
  ClientMessage,
  EndMessage,
  OptionId,
  ServerMessage,
  StateMessage,
  encodeClientMessage,
} from "./protocol.js";
import { KeyMap, lookupKey } from "./keymap.js";

export type SendFn = (encoded: string) => boolean;

export class SessionStore {
  state: StateMessage | null = null;
  end: EndMessage | null = null;
  banner: string | null = null;
  reconnectPending = false;

  private optimistic: (OptionId | null)[] = [null, null];
  private lastSent: (OptionId | null)[] = [null, null];
  private queued: ClientMessage | null = null;

  constructor(private keymap: KeyMap, private send: SendFn) {}

  /** Blue agent ids in slot order, from the latest state frame. */
  blueAgentIds(): number[] {
    if (this.state === null) return [];
    return Object.keys(this.state.options_active)
      .map(Number)
      .sort((a, b) => a - b);
  }

  /** Option shown for a blue slot: optimistic if set, else server-reported. */
  activeOption(slot: 0 | 1): OptionId | null {
    const local = this.optimistic[slot];
    if (local !== null) return local;
    const ids = this.blueAgentIds();
    if (ids.length <= slot || this.state === null) return null;
    return this.state.options_active[String(ids[slot])] as OptionId;
  }

  handleServerFrame(raw: string, parse: (s: string) => ServerMessage): void {
    let msg: ServerMessage;
    try {
      msg = parse(raw);
    } catch (exc) {
      this.banner = `malformed message: ${(exc as Error).message}`;
      return;
    }
    this.applyServerMessage(msg);
  }

  applyServerMessage(msg: ServerMessage): void {
    if (msg.type === "error") {
      this.banner = msg.error;
      return;
    }
    if (msg.type === "end") {
      this.end = msg;
      return;
    }
    // stale or duplicate frames are dropped; ticks only move forward
    if (this.state !== null && msg.tick <= this.state.tick) return;
    this.state = msg;
    this.banner = null;
    const ids = this.blueAgentIds();
    for (const slot of [0, 1] as const) {
      if (
        this.optimistic[slot] !== null &&
        ids.length > slot &&
        msg.options_active[String(ids[slot])] === this.optimistic[slot]
      ) {
        this.optimistic[slot] = null; // server caught up
      }
    }
  }

  /** Handle one key press; returns the outgoing message, if any. */
  onKey(key: string): ClientMessage | null {
    const binding = lookupKey(this.keymap, key);
    if (binding === null) return null;
    const ids = this.blueAgentIds();
    if (ids.length <= binding.slot) return null;
    if (this.lastSent[binding.slot] === binding.option) return null;
    const msg: ClientMessage = {
      type: "option",
      agent_id: ids[binding.slot],
      option: binding.option,
    };
    this.optimistic[binding.slot] = binding.option;
    this.lastSent[binding.slot] = binding.option;
    this.dispatch(msg);
    return msg;
  }

  control(cmd: "start" | "pause" | "reset"): void {
    if (cmd === "reset") {
      this.state = null;
      this.end = null;
      this.optimistic = [null, null];
      this.lastSent = [null, null];
    }
    this.dispatch({ type: "control", cmd });
  }

  /** Re-send the one queued message after the socket comes back. */
  flushQueued(): void {
    this.reconnectPending = false;
    const msg = this.queued;
    this.queued = null;
    if (msg !== null) this.dispatch(msg);
  }

  private dispatch(msg: ClientMessage): void {
    if (!this.send(encodeClientMessage(msg))) {
      // keep only the most recent failed message, queued once
      this.queued = msg;
      this.reconnectPending = true;
    }
  }
}
