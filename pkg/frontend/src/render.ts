/** Canvas renderer for the top-down field view.
 *
 * Takes the 2D-context surface as an interface so the draw logic can be
 * exercised against a recording stub.
 */

import { AgentView, OPTION_NAMES, OptionId, StateMessage } from "./protocol.js";

export const FIELD_W = 160;
export const FIELD_H = 80;
export const GRAB_RADIUS = 10;
export const TICK_HZ = 10;

/** The subset of CanvasRenderingContext2D the renderer uses. */
export interface Surface {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  textAlign: string;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  closePath(): void;
  fill(): void;
  stroke(): void;
  fillText(text: string, x: number, y: number): void;
}

export interface Layout {
  width: number;
  height: number;
  margin: number;
}

const TEAM_COLOR = { blue: "#3a6ea5", red: "#b5443c" };
const HALO_COLOR = "#3fbf4f";

export function fieldScale(layout: Layout): number {
  return Math.min(
    (layout.width - 2 * layout.margin) / FIELD_W,
    (layout.height - 2 * layout.margin) / FIELD_H,
  );
}

export function toScreen(layout: Layout, x: number, y: number): [number, number] {
  const s = fieldScale(layout);
  // sim y grows upward; canvas y grows downward
  return [layout.margin + x * s, layout.margin + (FIELD_H - y) * s];
}

function drawAgent(ctx: Surface, layout: Layout, agent: AgentView): void {
  const s = fieldScale(layout);
  const [cx, cy] = toScreen(layout, agent.x, agent.y);
  const r = 2.2 * s;
  if (agent.tagged) {
    ctx.strokeStyle = HALO_COLOR;
    ctx.lineWidth = 0.8 * s;
    ctx.beginPath();
    ctx.arc(cx, cy, r * 1.8, 0, 2 * Math.PI);
    ctx.stroke();
  }
  // triangle pointing along the heading
  const rad = (agent.heading * Math.PI) / 180;
  const nose: [number, number] = [cx + r * Math.cos(rad), cy - r * Math.sin(rad)];
  const left: [number, number] = [
    cx + r * Math.cos(rad + 2.5),
    cy - r * Math.sin(rad + 2.5),
  ];
  const right: [number, number] = [
    cx + r * Math.cos(rad - 2.5),
    cy - r * Math.sin(rad - 2.5),
  ];
  ctx.fillStyle = TEAM_COLOR[agent.team];
  ctx.beginPath();
  ctx.moveTo(nose[0], nose[1]);
  ctx.lineTo(left[0], left[1]);
  ctx.lineTo(right[0], right[1]);
  ctx.closePath();
  ctx.fill();
  if (agent.has_flag) {
    ctx.fillStyle = TEAM_COLOR[agent.team === "blue" ? "red" : "blue"];
    ctx.fillRect(cx - 0.6 * s, cy - r - 1.8 * s, 1.2 * s, 1.2 * s);
  }
}

export function renderState(
  ctx: Surface,
  layout: Layout,
  state: StateMessage,
  activeOptions: (OptionId | null)[],
): void {
  const s = fieldScale(layout);
  ctx.fillStyle = "#10321f";
  ctx.fillRect(0, 0, layout.width, layout.height);
  const [x0, y0] = toScreen(layout, 0, FIELD_H);
  ctx.strokeStyle = "#e8e8e8";
  ctx.lineWidth = 0.4 * s;
  ctx.strokeRect(x0, y0, FIELD_W * s, FIELD_H * s);

  // center line splitting the two sides
  const [mx, myTop] = toScreen(layout, FIELD_W / 2, FIELD_H);
  const [, myBot] = toScreen(layout, FIELD_W / 2, 0);
  ctx.beginPath();
  ctx.moveTo(mx, myTop);
  ctx.lineTo(mx, myBot);
  ctx.stroke();

  for (const team of ["blue", "red"] as const) {
    const flag = state.flags[team];
    const [fx, fy] = toScreen(layout, flag.x, flag.y);
    ctx.strokeStyle = TEAM_COLOR[team];
    ctx.lineWidth = 0.4 * s;
    ctx.beginPath();
    ctx.arc(fx, fy, GRAB_RADIUS * s, 0, 2 * Math.PI);
    ctx.stroke();
    if (!flag.taken) {
      ctx.fillStyle = TEAM_COLOR[team];
      ctx.fillRect(fx - 0.8 * s, fy - 0.8 * s, 1.6 * s, 1.6 * s);
    }
  }

  for (const agent of state.agents) {
    drawAgent(ctx, layout, agent);
  }

  ctx.fillStyle = "#ffffff";
  ctx.font = `${Math.round(4 * s)}px sans-serif`;
  ctx.textAlign = "center";
  const clock = (state.tick / TICK_HZ).toFixed(1);
  ctx.fillText(
    `blue ${state.score.blue} : ${state.score.red} red   t=${clock}s`,
    layout.width / 2,
    layout.margin * 0.7,
  );

  // active option per blue agent, under the field
  const labels = activeOptions.map((opt, slot) => {
    const name = opt === null ? "-" : OPTION_NAMES[opt];
    return `blue${slot}: ${name}`;
  });
  ctx.fillText(labels.join("   "), layout.width / 2, layout.height - layout.margin * 0.3);
}

export function renderBanner(ctx: Surface, layout: Layout, text: string): void {
  ctx.fillStyle = "#7a1f1f";
  ctx.fillRect(0, 0, layout.width, layout.margin);
  ctx.fillStyle = "#ffffff";
  ctx.font = `${Math.round(layout.margin * 0.5)}px sans-serif`;
  ctx.textAlign = "center";
  ctx.fillText(text, layout.width / 2, layout.margin * 0.65);
}

export function renderEnd(
  ctx: Surface,
  layout: Layout,
  eta: number,
  psi: number,
  file: string,
): void {
  ctx.fillStyle = "rgba(0, 0, 0, 0.7)";
  ctx.fillRect(0, 0, layout.width, layout.height);
  ctx.fillStyle = "#ffffff";
  ctx.font = `${Math.round(layout.margin)}px sans-serif`;
  ctx.textAlign = "center";
  ctx.fillText(`episode over  eta=${eta}  psi=${psi}`, layout.width / 2, layout.height / 2);
  ctx.fillText(`saved: ${file}`, layout.width / 2, layout.height / 2 + layout.margin * 1.2);
}
