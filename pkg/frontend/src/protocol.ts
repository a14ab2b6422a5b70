// Frame types for the simulation backend's websocket protocol (schema v1).
// See docs/protocol.md in the repository root.

export const SCHEMA_VERSION = 1;

export type Vec3 = [number, number, number];

export interface ConfigFrame {
  type: "config";
  v: number;
  workspace_bounds: [number, number][];
  d_act: number;
  d_at: number;
  waypoints: number[][];
  stream_hz: number;
}

export interface StateFrame {
  type: "state";
  v: number;
  t: number;
  x_r: Vec3;
  q: number[];
  hand_true: (number | null)[];
  hand_est: (number | null)[];
  d_ro: number | null;
  mode: 1 | 2 | 3 | 4;
  vib_left: boolean;
  vib_right: boolean;
  fdcm: boolean;
  case: string;
  marker_visible: boolean;
  marker_angle_y: number | null;
  marker_angle_x: number | null;
  goal_index: number;
  paused: boolean;
}

export interface ErrorFrame {
  type: "error";
  v: number;
  code: string;
  message: string;
}

export type ServerFrame = ConfigFrame | StateFrame | ErrorFrame;

export interface HandMoveMsg {
  type: "hand_move";
  x: number;
  y: number;
  z: number;
}

export interface SetParamMsg {
  type: "set_param";
  name: "retreat_speed" | "v_max" | "theta_obs";
  value: number;
}

export type ClientFrame =
  | HandMoveMsg
  | SetParamMsg
  | { type: "pause" }
  | { type: "resume" }
  | { type: "reset" };

/** Parse and version-check one server frame; null when unusable. */
export function parseServerFrame(text: string): ServerFrame | null {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof raw !== "object" || raw === null) return null;
  const frame = raw as { type?: unknown; v?: unknown };
  if (frame.v !== SCHEMA_VERSION) return null;
  if (frame.type === "config" || frame.type === "state" || frame.type === "error") {
    return raw as ServerFrame;
  }
  return null;
}
