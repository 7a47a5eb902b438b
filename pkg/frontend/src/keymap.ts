/** Keyboard layout: one key per (blue agent slot, option) pair. */

import { OptionId } from "./protocol.js";

export interface KeyBinding {
  slot: 0 | 1;
  option: OptionId;
}

export type KeyMap = Record<string, KeyBinding>;

const OPTION_ORDER: OptionId[] = [
  OptionId.ATTACK,
  OptionId.FLANK,
  OptionId.AVOID,
  OptionId.RETREAT,
  OptionId.GUARD,
  OptionId.TAG,
  OptionId.NO_OP,
];

const SLOT0_KEYS = ["q", "w", "e", "a", "s", "d", "x"];
const SLOT1_KEYS = ["u", "i", "o", "j", "k", "l", "m"];

export function defaultKeyMap(): KeyMap {
  const map: KeyMap = {};
  OPTION_ORDER.forEach((option, i) => {
    map[SLOT0_KEYS[i]] = { slot: 0, option };
    map[SLOT1_KEYS[i]] = { slot: 1, option };
  });
  return map;
}

/** Reject maps with duplicate keys or unreachable (slot, option) pairs. */
export function validateKeyMap(map: KeyMap): void {
  const seen = new Set<string>();
  for (const [key, binding] of Object.entries(map)) {
    if (key.length === 0) throw new Error("empty key in binding table");
    const pair = `${binding.slot}:${binding.option}`;
    if (seen.has(pair)) throw new Error(`duplicate binding for ${pair}`);
    seen.add(pair);
  }
  for (const slot of [0, 1]) {
    for (const option of OPTION_ORDER) {
      if (!seen.has(`${slot}:${option}`)) {
        throw new Error(`no key bound for agent slot ${slot}, option ${option}`);
      }
    }
  }
}

/** Look up a key event; unbound keys return null. Case-insensitive. */
export function lookupKey(map: KeyMap, key: string): KeyBinding | null {
  return map[key.toLowerCase()] ?? null;
}
