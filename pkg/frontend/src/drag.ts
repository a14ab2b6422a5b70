// Pointer-drag to hand_move conversion: inverse projection on the selected
// plane, workspace clamping, and a 60 messages/s throttle.

import { HandMoveMsg, Vec3 } from "./protocol.js";
import { Viewport, unproject } from "./render.js";
import { ViewState } from "./state.js";

export const MAX_MESSAGES_PER_SECOND = 60;

export interface DragThrottle {
  lastSentMs: number;
}

export function newThrottle(): DragThrottle {
  return { lastSentMs: -Infinity };
}

function currentHand(view: ViewState): Vec3 | null {
  const latest = view.latest;
  if (!latest) return null;
  for (const candidate of [latest.hand_true, latest.hand_est]) {
    if (candidate.length === 3 && candidate.every((v) => v !== null && Number.isFinite(v))) {
      return candidate as Vec3;
    }
  }
  return null;
}

function clamp(value: number, lo: number, hi: number): number {
  return Math.min(Math.max(value, lo), hi);
}

/**
 * Convert a pointer position into a hand_move message, or null when no
 * message should be sent (disconnected, paused, no state yet, throttled).
 * The out-of-plane coordinate keeps its current value.
 */
export function dragToHandMove(
  view: ViewState,
  vp: Viewport,
  canvasX: number,
  canvasY: number,
  nowMs: number,
  throttle: DragThrottle,
): HandMoveMsg | null {
  if (view.connection !== "open" || !view.config || !view.latest) return null;
  if (view.latest.paused) return null;
  if (nowMs - throttle.lastSentMs < 1000 / MAX_MESSAGES_PER_SECOND) return null;

  const hand = currentHand(view) ?? midpoint(view);
  const [a, b] = unproject(view, vp, canvasX, canvasY);
  const target: Vec3 = view.plane === "top" ? [a, b, hand[2]] : [a, hand[1], b];

  const bounds = view.config.workspace_bounds;
  const clamped = target.map((v, i) => clamp(v, bounds[i][0], bounds[i][1])) as Vec3;

  throttle.lastSentMs = nowMs;
  return { type: "hand_move", x: clamped[0], y: clamped[1], z: clamped[2] };
}

function midpoint(view: ViewState): Vec3 {
  const bounds = view.config!.workspace_bounds;
  return [0, 1, 2].map((i) => (bounds[i][0] + bounds[i][1]) / 2) as Vec3;
}
