import { ConfigFrame, StateFrame } from "../src/protocol.js";
import { ViewState, applyServerFrame, initialViewState, setConnection } from "../src/state.js";

export function configFrame(overrides: Partial<ConfigFrame> = {}): ConfigFrame {
  return {
    type: "config",
    v: 1,
    workspace_bounds: [
      [-0.2, 1.2],
      [-0.8, 0.8],
      [0.0, 1.0],
    ],
    d_act: 0.1,
    d_at: 0.3,
    waypoints: [
      [0.86, 0.35, 0.2],
      [0.72, 0.32, 0.3],
    ],
    stream_hz: 30,
    ...overrides,
  };
}

export function stateFrame(overrides: Partial<StateFrame> = {}): StateFrame {
  return {
    type: "state",
    v: 1,
    t: 1.0,
    x_r: [0.86, 0.0, 0.2],
    q: [0, 0, 0, 0, 0, 0],
    hand_true: [1.0, -0.2, 0.25],
    hand_est: [1.01, -0.19, 0.24],
    d_ro: 0.25,
    mode: 1,
    vib_left: false,
    vib_right: false,
    fdcm: false,
    case: "no_avoidance",
    marker_visible: true,
    marker_angle_y: 0.7,
    marker_angle_x: 0.35,
    goal_index: 0,
    paused: false,
    ...overrides,
  };
}

export function connectedView(state?: Partial<StateFrame>, nowMs = 0): ViewState {
  let view = setConnection(initialViewState(), "open");
  view = applyServerFrame(view, configFrame(), nowMs);
  view = applyServerFrame(view, stateFrame(state), nowMs);
  return view;
}
