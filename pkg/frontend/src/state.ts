// View state and its pure reducers. Rendering and networking both operate on
// this structure; nothing here touches the DOM.

import { ConfigFrame, ServerFrame, StateFrame } from "./protocol.js";

export const TRAIL_SECONDS = 30;
export const TRAIL_MAX_POINTS = 2000;
export const STALE_AFTER_MS = 1000;

export type Plane = "top" | "side";
export type Connection = "connecting" | "open" | "closed";

export interface TrailPoint {
  t: number;
  p: [number, number, number];
}

export interface PanelParams {
  retreat_speed: number;
  v_max: number;
  theta_obs_deg: number;
}

export interface ViewState {
  config: ConfigFrame | null;
  latest: StateFrame | null;
  trail: TrailPoint[];
  connection: Connection;
  plane: Plane;
  lastFrameAtMs: number | null;
  lastError: string | null;
  params: PanelParams;
}

export function initialViewState(): ViewState {
  return {
    config: null,
    latest: null,
    trail: [],
    connection: "connecting",
    plane: "top",
    lastFrameAtMs: null,
    lastError: null,
    params: { retreat_speed: 0.2, v_max: 0.2, theta_obs_deg: 70 },
  };
}

/** Apply one (already version-checked) server frame. */
export function applyServerFrame(view: ViewState, frame: ServerFrame, nowMs: number): ViewState {
  if (frame.type === "config") {
    return { ...view, config: frame, trail: [], latest: null, lastFrameAtMs: nowMs };
  }
  if (frame.type === "error") {
    return { ...view, lastError: `${frame.code}: ${frame.message}` };
  }
  const trail = pushTrail(view.trail, { t: frame.t, p: [...frame.x_r] as [number, number, number] });
  return { ...view, latest: frame, trail, lastFrameAtMs: nowMs };
}

function pushTrail(trail: TrailPoint[], point: TrailPoint): TrailPoint[] {
  // a reset (sim time jumping backwards) clears the old trail
  const keep = trail.length > 0 && trail[trail.length - 1].t > point.t ? [] : trail.slice();
  keep.push(point);
  const cutoff = point.t - TRAIL_SECONDS;
  let first = 0;
  while (first < keep.length && keep[first].t < cutoff) first++;
  const pruned = first > 0 ? keep.slice(first) : keep;
  return pruned.length > TRAIL_MAX_POINTS
    ? pruned.slice(pruned.length - TRAIL_MAX_POINTS)
    : pruned;
}

export function setConnection(view: ViewState, connection: Connection): ViewState {
  return { ...view, connection };
}

export function setPlane(view: ViewState, plane: Plane): ViewState {
  return { ...view, plane };
}

export function setParams(view: ViewState, params: Partial<PanelParams>): ViewState {
  return { ...view, params: { ...view.params, ...params } };
}

export function isStale(view: ViewState, nowMs: number): boolean {
  return view.lastFrameAtMs !== null && nowMs - view.lastFrameAtMs > STALE_AFTER_MS;
}
