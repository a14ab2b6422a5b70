"""Deterministic fixed-step scenario engine.

Couples the hand model, wearable gimbal, tracking pipeline, safety monitor,
collision-avoidance controller and arm integration at the control period,
logging rows at the (slower) logging period. Given the same config and seed
the produced trace is bitwise identical run to run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import apf, gimbal as gimbal_mod, kinematics
from .apf import ApfController, Case, ControlDecision, GoalSpec, ObstacleState
from .hand import HandModel
from .perception import ObservationPipeline, hand_position
from .safety import Mode, SafetyMonitor, SafetySnapshot
from .scenario import ScenarioConfig
from .transforms import Transform

TRACE_SCHEMA_VERSION = 1

# far-away placeholder used before the marker has ever been sighted
_NEVER_SEEN = np.array([1e9, 1e9, 1e9])


class SimulationError(RuntimeError):
    """Engine state became non-finite; carries the offending step index."""

    def __init__(self, step_index: int, detail: str):
        self.step_index = step_index
        super().__init__(f"simulation aborted at step {step_index}: {detail}")


@dataclass(frozen=True)
class TraceRow:
    t: float
    q: tuple[float, ...]
    x_r: tuple[float, float, float]
    v_cmd: tuple[float, float, float]
    case: str
    d_ro: float
    theta_c: float
    mode: int
    vib_left: bool
    vib_right: bool
    fdcm: bool
    marker_visible: bool
    marker_angle_y: float
    marker_angle_x: float
    hand_true: tuple[float, float, float]
    hand_est: tuple[float, float, float]
    goal_index: int


@dataclass
class SimTrace:
    name: str
    seed: int
    control_dt: float
    log_dt: float
    waypoints: tuple
    rows: list[TraceRow] = field(default_factory=list)
    completion_time: float | None = None
    duration: float = 0.0

    @property
    def task_time(self) -> float:
        return self.completion_time if self.completion_time is not None else self.duration

    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.rows])

    def tcp_positions(self) -> np.ndarray:
        return np.array([r.x_r for r in self.rows])


def _tup3(a) -> tuple[float, float, float]:
    return (float(a[0]), float(a[1]), float(a[2]))


class Engine:
    """Single-owner, single-threaded scenario stepper."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.model = config.arm
        self.model.check_limits(config.initial_q)
        self.controller = ApfController(
            self.model, config.controller, damping=config.damping,
            position_only_ik=config.position_only_ik,
        )
        self.monitor = SafetyMonitor(config.controller, dwell=config.safety.dwell)
        self.hand = HandModel(config.hand) if config.hand is not None else None
        self.pipeline = (
            ObservationPipeline(config.camera, config.noise)
            if config.camera is not None
            else None
        )
        self._log_every = max(1, round(config.log_dt / config.control_dt))
        self.reset()

    # -- lifecycle ---------------------------------------------------------

    def reset(self) -> None:
        cfg = self.config
        self.joints = kinematics.JointState(q=cfg.initial_q.copy(), qdot=np.zeros(6))
        self.robot = kinematics.robot_state(self.model, self.joints)
        self.step_index = 0
        self.goal_index = 0
        self._dwell_progress = 0.0
        self._waypoints_done = False
        self.completion_time: float | None = None
        self.fdcm_active = False
        self.safety: SafetySnapshot | None = None
        self.decision: ControlDecision | None = None
        self.gimbal_state = cfg.gimbal.initial_state()
        self._orientation_error = None
        self._marker_angles = (math.nan, math.nan)
        self._last_estimate: np.ndarray | None = None
        self._last_seen_t = -math.inf
        self._hand_true = np.full(3, math.nan)
        self._hand_est_row = np.full(3, math.nan)
        self._marker_visible = False
        self._forearm_pose: Transform | None = None
        self._pending_targets: list[np.ndarray] = []
        if self.hand is not None:
            self.hand.reset()
        self.monitor.reset()
        if self.pipeline is not None:
            self.pipeline = ObservationPipeline(cfg.camera, cfg.noise)
        self.trace = SimTrace(
            name=cfg.name,
            seed=cfg.seed,
            control_dt=cfg.control_dt,
            log_dt=cfg.log_dt,
            waypoints=cfg.waypoints,
            duration=cfg.duration,
        )

    # -- external inputs (interactive mode) ---------------------------------

    def push_hand_target(self, position) -> None:
        self._pending_targets.append(np.asarray(position, dtype=float).reshape(3))

    def set_param(self, name: str, value: float) -> None:
        """Live-tunable parameters; anything else is rejected."""
        if name == "retreat_speed":
            if self.hand is None:
                raise ValueError("no hand model in this scenario")
            self.hand.spec = replace(self.hand.spec, retreat_speed=float(value))
        elif name == "v_max":
            self.controller.params = replace(self.controller.params, v_max=float(value))
        elif name == "theta_obs":
            self.controller.params = replace(self.controller.params, theta_obs=float(value))
        else:
            raise ValueError(f"parameter {name!r} is not tunable")

    # -- stepping ------------------------------------------------------------

    @property
    def t(self) -> float:
        return self.step_index * self.config.control_dt

    @property
    def done(self) -> bool:
        return self._waypoints_done or self.t >= self.config.duration

    def step(self) -> None:
        cfg = self.config
        dt = cfg.control_dt
        t = self.t

        obstacle = self._sense(t, dt)
        goal = GoalSpec(np.asarray(cfg.waypoints[self.goal_index].position))
        jac = kinematics.jacobian(self.model, self.joints.q)
        self.decision = self.controller.step(self.robot, goal, obstacle, self.fdcm_active, jac=jac)
        self.fdcm_active = self.decision.case is Case.FDCM

        self.safety = self._update_safety(t, obstacle)

        if self.step_index % self._log_every == 0:
            self._log_row(t)

        self.joints = kinematics.integrate(self.model, self.joints, self.decision.qdot_cmd, dt)
        if not np.all(np.isfinite(self.joints.q)):
            raise SimulationError(self.step_index, "joint state non-finite")
        self.robot = kinematics.robot_state(self.model, self.joints)
        self.step_index += 1
        self._advance_waypoints(self.t, dt)

    def run(self) -> SimTrace:
        while not self.done:
            self.step()
        # closing sample so the trace captures the terminal state
        self._log_row(self.t)
        self.trace.completion_time = self.completion_time
        return self.trace

    # -- internals -----------------------------------------------------------

    def _sense(self, t: float, dt: float) -> ObstacleState | None:
        if self.hand is None:
            self._hand_true = np.full(3, math.nan)
            self._hand_est_row = np.full(3, math.nan)
            self._marker_visible = False
            return None

        if self._pending_targets:
            self.hand.set_target(self._pending_targets[-1])
            self._pending_targets.clear()

        sample = self.hand.update(t, dt, self.safety, self.robot.x_r)
        self._forearm_pose = sample.forearm_pose

        cfg = self.config
        if cfg.gimbal.enabled and self._orientation_error is not None:
            self.gimbal_state = gimbal_mod.hysteresis_step(
                self.gimbal_state, self._orientation_error, cfg.gimbal.band, dt,
                cfg.gimbal.axis_signs,
            )
        marker_pose = gimbal_mod.marker_pose(sample.forearm_pose, self.gimbal_state,
                                             cfg.gimbal.mount())
        offset = np.asarray(cfg.forearm_offset)
        self._hand_true = marker_pose.translation + marker_pose.rotation @ offset

        obs = self.pipeline.observe(marker_pose, cfg.occluders, t)
        self._marker_visible = obs.visible
        if obs.visible:
            angle_y, angle_x, degenerate = gimbal_mod.marker_angles(
                obs.orientation_base, cfg.camera,
            )
            if not degenerate:
                self._marker_angles = (angle_y, angle_x)
                self._orientation_error = gimbal_mod.orientation_error(
                    angle_y, angle_x, cfg.gimbal.targets,
                )
            self._last_estimate = hand_position(obs, offset)
            self._last_seen_t = t
            self._hand_est_row = self._last_estimate
        else:
            self._hand_est_row = np.full(3, math.nan)

        if self._last_estimate is None:
            return ObstacleState(_NEVER_SEEN, visible=False, age=math.inf)
        return ObstacleState(
            self._last_estimate,
            visible=obs.visible,
            age=0.0 if obs.visible else (t - self._last_seen_t),
        )

    def _update_safety(self, t: float, obstacle: ObstacleState | None) -> SafetySnapshot:
        if obstacle is None:
            return SafetySnapshot(Mode.MODE1, False, False, False,
                                  math.inf, True, timestamp=t)
        side = 1
        mode2 = self.config.safety.mode2_motor
        if mode2 == "left":
            side = -1
        elif mode2 == "facing" and self._forearm_pose is not None and self._last_estimate is not None:
            toward = self.robot.x_r - self._last_estimate
            side = 1 if toward @ self._forearm_pose.rotation[:, 1] >= 0 else -1
        return self.monitor.update(self.decision.d_ro, obstacle.visible, t,
                                   self.fdcm_active, side)

    def _advance_waypoints(self, t: float, dt: float) -> None:
        if self._waypoints_done:
            return
        wp = self.config.waypoints[self.goal_index]
        err = np.linalg.norm(self.robot.x_r - np.asarray(wp.position))
        if err < self.config.waypoint_tolerance:
            self._dwell_progress += dt
            if self._dwell_progress >= wp.dwell:
                if self.goal_index + 1 < len(self.config.waypoints):
                    self.goal_index += 1
                    self._dwell_progress = 0.0
                else:
                    self._waypoints_done = True
                    self.completion_time = t
        else:
            self._dwell_progress = 0.0

    def _log_row(self, t: float) -> None:
        d = self.decision
        s = self.safety
        self.trace.rows.append(
            TraceRow(
                t=t,
                q=tuple(float(x) for x in self.joints.q),
                x_r=_tup3(self.robot.x_r),
                v_cmd=_tup3(d.tcp_velocity_cmd) if d is not None else (0.0, 0.0, 0.0),
                case=d.case.value if d is not None else Case.NO_AVOIDANCE.value,
                d_ro=float(d.d_ro) if d is not None else math.inf,
                theta_c=float(d.theta_c) if d is not None else 0.0,
                mode=int(s.mode) if s is not None else 1,
                vib_left=bool(s.vib_left) if s is not None else False,
                vib_right=bool(s.vib_right) if s is not None else False,
                fdcm=self.fdcm_active,
                marker_visible=self._marker_visible,
                marker_angle_y=self._marker_angles[0] if self._marker_visible else math.nan,
                marker_angle_x=self._marker_angles[1] if self._marker_visible else math.nan,
                hand_true=_tup3(self._hand_true),
                hand_est=_tup3(self._hand_est_row),
                goal_index=self.goal_index,
            )
        )


def run(config: ScenarioConfig) -> SimTrace:
    """Run a scenario to completion and return its trace."""
    return Engine(config).run()
