/** Browser entry point: settings, websocket, canvas loop, key handling. */

import { defaultKeyMap, KeyMap, validateKeyMap } from "./keymap.js";
import { parseServerMessage } from "./protocol.js";
import { Layout, renderBanner, renderEnd, renderState } from "./render.js";
import { SessionStore } from "./store.js";

interface Settings {
  server_url: string;
  bindings?: KeyMap;
}

async function loadSettings(): Promise<Settings> {
  const resp = await fetch("settings.json");
  return (await resp.json()) as Settings;
}

export async function start(): Promise<void> {
  const settings = await loadSettings();
  const keymap = settings.bindings ?? defaultKeyMap();
  validateKeyMap(keymap);

  const canvas = document.getElementById("field") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d");
  if (ctx === null) throw new Error("canvas 2d context unavailable");
  const layout: Layout = { width: canvas.width, height: canvas.height, margin: 40 };

  let socket = new WebSocket(settings.server_url);
  const store = new SessionStore(keymap, (encoded) => {
    if (socket.readyState !== WebSocket.OPEN) return false;
    socket.send(encoded);
    return true;
  });

  const attach = (ws: WebSocket) => {
    ws.onmessage = (ev) => store.handleServerFrame(String(ev.data), parseServerMessage);
    ws.onopen = () => {
      if (store.reconnectPending) store.flushQueued();
    };
    ws.onclose = () => {
      store.banner = "disconnected, reconnecting...";
      store.reconnectPending = true;
      setTimeout(() => {
        socket = new WebSocket(settings.server_url);
        attach(socket);
      }, 1000);
    };
  };
  attach(socket);

  window.addEventListener("keydown", (ev) => {
    if (ev.key === "Enter") {
      store.control("start");
      return;
    }
    if (ev.key === "Escape") {
      store.control("pause");
      return;
    }
    if (ev.key === "Backspace") {
      store.control("reset");
      return;
    }
    store.onKey(ev.key);
  });

  const frame = () => {
    if (store.state !== null) {
      renderState(ctx, layout, store.state, [
        store.activeOption(0),
        store.activeOption(1),
      ]);
    }
    if (store.banner !== null) renderBanner(ctx, layout, store.banner);
    if (store.end !== null) {
      renderEnd(ctx, layout, store.end.eta, store.end.psi, store.end.file);
    }
    requestAnimationFrame(frame);
  };
  requestAnimationFrame(frame);
}

if (typeof document !== "undefined" && document.getElementById("field") !== null) {
  void start();
}
