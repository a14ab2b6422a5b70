// Rendering as a pure function: ViewState -> draw-command list, plus a thin
// painter that plays commands onto a 2D canvas context. Tests snapshot the
// command list; only paint() touches the canvas API.

import { Vec3 } from "./protocol.js";
import { ViewState, isStale } from "./state.js";

export interface Viewport {
  width: number;
  height: number;
}

export type DrawCommand =
  | { kind: "clear"; color: string }
  | { kind: "circle"; x: number; y: number; r: number; color: string; fill: boolean; width?: number; id?: string }
  | { kind: "cross"; x: number; y: number; size: number; color: string; id?: string }
  | { kind: "polyline"; points: [number, number][]; color: string; width: number; id?: string }
  | { kind: "rect"; x: number; y: number; w: number; h: number; color: string; fill: boolean; id?: string }
  | { kind: "text"; x: number; y: number; text: string; color: string; size: number; id?: string };

const MODE_COLORS: Record<number, string> = {
  1: "#2e7d32",
  2: "#f9a825",
  3: "#c62828",
  4: "#6a1b9a",
};

const MARGIN = 24;

interface Frame2D {
  axes: [number, number]; // workspace axis indices drawn as (right, up)
  scale: number;
  offX: number;
  offY: number;
}

function planeFrame(view: ViewState, vp: Viewport): Frame2D {
  const bounds = view.config?.workspace_bounds ?? [
    [-0.2, 1.2],
    [-0.8, 0.8],
    [0.0, 1.0],
  ];
  const axes: [number, number] = view.plane === "top" ? [0, 1] : [0, 2];
  const [a, b] = axes;
  const spanA = bounds[a][1] - bounds[a][0];
  const spanB = bounds[b][1] - bounds[b][0];
  const scale = Math.min(
    (vp.width - 2 * MARGIN) / spanA,
    (vp.height - 2 * MARGIN) / spanB,
  );
  return {
    axes,
    scale,
    offX: MARGIN - bounds[a][0] * scale,
    offY: vp.height - MARGIN + bounds[b][0] * scale,
  };
}

/** Workspace point -> canvas pixel on the selected plane (y axis flipped). */
export function project(view: ViewState, vp: Viewport, p: Vec3): [number, number] {
  const f = planeFrame(view, vp);
  return [f.offX + p[f.axes[0]] * f.scale, f.offY - p[f.axes[1]] * f.scale];
}

/** Canvas pixel -> the two in-plane workspace coordinates. */
export function unproject(view: ViewState, vp: Viewport, cx: number, cy: number): [number, number] {
  const f = planeFrame(view, vp);
  return [(cx - f.offX) / f.scale, (f.offY - cy) / f.scale];
}

function metersToPixels(view: ViewState, vp: Viewport, meters: number): number {
  return meters * planeFrame(view, vp).scale;
}

function vec3(values: (number | null)[]): Vec3 | null {
  if (values.length !== 3 || values.some((v) => v === null || !Number.isFinite(v))) return null;
  return values as Vec3;
}

export function render(view: ViewState, vp: Viewport, nowMs: number): DrawCommand[] {
  const out: DrawCommand[] = [{ kind: "clear", color: "#10141a" }];

  if (view.connection !== "open") {
    out.push({ kind: "rect", x: 0, y: 0, w: vp.width, h: vp.height, color: "rgba(16,20,26,0.85)", fill: true, id: "overlay" });
    out.push({ kind: "text", x: vp.width / 2, y: vp.height / 2, text: "reconnecting…", color: "#e0e0e0", size: 18, id: "reconnect-overlay" });
    return out;
  }

  const state = view.latest;
  if (!view.config || !state) {
    out.push({ kind: "text", x: vp.width / 2, y: vp.height / 2, text: "waiting for state…", color: "#9e9e9e", size: 16, id: "waiting" });
    return out;
  }

  // workspace frame and goal waypoints
  const b = view.config.workspace_bounds;
  const corner = project(view, vp, [b[0][0], b[1][0], b[2][0]] as Vec3);
  const opposite = project(view, vp, [b[0][1], b[1][1], b[2][1]] as Vec3);
  out.push({
    kind: "rect",
    x: Math.min(corner[0], opposite[0]),
    y: Math.min(corner[1], opposite[1]),
    w: Math.abs(opposite[0] - corner[0]),
    h: Math.abs(opposite[1] - corner[1]),
    color: "#37474f",
    fill: false,
    id: "workspace",
  });
  for (const [i, wp] of view.config.waypoints.entries()) {
    const [x, y] = project(view, vp, wp as Vec3);
    out.push({
      kind: "circle", x, y, r: 4,
      color: i === state.goal_index ? "#81d4fa" : "#455a64",
      fill: true, id: `waypoint-${i}`,
    });
  }

  // robot base and TCP trail
  const base = project(view, vp, [0, 0, 0]);
  out.push({ kind: "rect", x: base[0] - 6, y: base[1] - 6, w: 12, h: 12, color: "#78909c", fill: true, id: "base" });
  if (view.trail.length > 1) {
    out.push({
      kind: "polyline",
      points: view.trail.map((tp) => project(view, vp, tp.p)),
      color: "#4dd0e1",
      width: 2,
      id: "trail",
    });
  }

  // TCP with its avoidance rings
  const tcp = project(view, vp, state.x_r);
  out.push({ kind: "circle", x: tcp[0], y: tcp[1], r: metersToPixels(view, vp, view.config.d_act), color: "#ef5350", fill: false, width: 1.5, id: "ring-act" });
  out.push({ kind: "circle", x: tcp[0], y: tcp[1], r: metersToPixels(view, vp, view.config.d_at), color: "#ffb74d", fill: false, width: 1.5, id: "ring-at" });
  out.push({ kind: "circle", x: tcp[0], y: tcp[1], r: 6, color: "#4dd0e1", fill: true, id: "tcp" });

  // hand: true point (dot) and tracked estimate (cross)
  const handTrue = vec3(state.hand_true);
  if (handTrue) {
    const [x, y] = project(view, vp, handTrue);
    out.push({ kind: "circle", x, y, r: 6, color: "#aed581", fill: true, id: "hand-true" });
  }
  const handEst = vec3(state.hand_est);
  if (handEst) {
    const [x, y] = project(view, vp, handEst);
    out.push({ kind: "cross", x, y, size: 8, color: "#fff176", id: "hand-est" });
  }

  // mode badge, vibration icons, free-drive banner
  out.push({ kind: "rect", x: 12, y: 12, w: 96, h: 26, color: MODE_COLORS[state.mode], fill: true, id: "mode-badge" });
  out.push({ kind: "text", x: 60, y: 30, text: `MODE ${state.mode}`, color: "#ffffff", size: 14, id: "mode-text" });
  out.push({
    kind: "circle", x: 128, y: 25, r: 8,
    color: state.vib_left ? "#ffee58" : "#37474f", fill: true, id: "vib-left",
  });
  out.push({
    kind: "circle", x: 152, y: 25, r: 8,
    color: state.vib_right ? "#ffee58" : "#37474f", fill: true, id: "vib-right",
  });
  if (state.fdcm) {
    out.push({ kind: "rect", x: vp.width / 2 - 110, y: 12, w: 220, h: 28, color: "#c62828", fill: true, id: "fdcm-banner" });
    out.push({ kind: "text", x: vp.width / 2, y: 31, text: "FREE DRIVE — robot holding", color: "#ffffff", size: 14, id: "fdcm-text" });
  }
  if (!state.marker_visible) {
    out.push({ kind: "text", x: vp.width / 2, y: 56, text: "marker not visible", color: "#ef9a9a", size: 13, id: "occluded-note" });
  }
  if (state.paused) {
    out.push({ kind: "text", x: vp.width - 60, y: 30, text: "PAUSED", color: "#ffcc80", size: 14, id: "paused" });
  }
  out.push({ kind: "text", x: 12, y: vp.height - 12, text: `t = ${state.t.toFixed(1)} s  d_RO = ${state.d_ro === null ? "—" : state.d_ro.toFixed(3) + " m"}  plane: ${view.plane}`, color: "#90a4ae", size: 12, id: "status-line" });

  if (isStale(view, nowMs)) {
    out.push({ kind: "rect", x: 0, y: 0, w: vp.width, h: vp.height, color: "rgba(40,40,40,0.6)", fill: true, id: "stale-overlay" });
    out.push({ kind: "text", x: vp.width / 2, y: vp.height / 2, text: "no fresh state (>1 s)", color: "#ffab91", size: 16, id: "stale-text" });
  }
  return out;
}

export function paint(ctx: CanvasRenderingContext2D, commands: DrawCommand[]): void {
  for (const cmd of commands) {
    switch (cmd.kind) {
      case "clear":
        ctx.fillStyle = cmd.color;
        ctx.fillRect(0, 0, ctx.canvas.width, ctx.canvas.height);
        break;
      case "circle":
        ctx.beginPath();
        ctx.arc(cmd.x, cmd.y, cmd.r, 0, Math.PI * 2);
        if (cmd.fill) {
          ctx.fillStyle = cmd.color;
          ctx.fill();
        } else {
          ctx.strokeStyle = cmd.color;
          ctx.lineWidth = cmd.width ?? 1;
          ctx.stroke();
        }
        break;
      case "cross":
        ctx.strokeStyle = cmd.color;
        ctx.lineWidth = 2;
        ctx.beginPath();
        ctx.moveTo(cmd.x - cmd.size, cmd.y - cmd.size);
        ctx.lineTo(cmd.x + cmd.size, cmd.y + cmd.size);
        ctx.moveTo(cmd.x - cmd.size, cmd.y + cmd.size);
        ctx.lineTo(cmd.x + cmd.size, cmd.y - cmd.size);
        ctx.stroke();
        break;
      case "polyline":
        if (cmd.points.length < 2) break;
        ctx.strokeStyle = cmd.color;
        ctx.lineWidth = cmd.width;
        ctx.beginPath();
        ctx.moveTo(cmd.points[0][0], cmd.points[0][1]);
        for (const [x, y] of cmd.points.slice(1)) ctx.lineTo(x, y);
        ctx.stroke();
        break;
      case "rect":
        if (cmd.fill) {
          ctx.fillStyle = cmd.color;
          ctx.fillRect(cmd.x, cmd.y, cmd.w, cmd.h);
        } else {
          ctx.strokeStyle = cmd.color;
          ctx.strokeRect(cmd.x, cmd.y, cmd.w, cmd.h);
        }
        break;
      case "text":
        ctx.fillStyle = cmd.color;
        ctx.font = `${cmd.size}px system-ui, sans-serif`;
        ctx.textAlign = "center";
        ctx.fillText(cmd.text, cmd.x, cmd.y);
        break;
    }
  }
}
