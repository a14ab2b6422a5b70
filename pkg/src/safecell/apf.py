"""Artificial-potential-field collision avoidance for the TCP.

Case selection over the robot-obstacle distance d_RO:
  - beyond d_AT: plain position controller (hyperbolic-tangent saturated),
  - inside the avoidance ring: blend the position command with a repulsive
    velocity, exponentially weighted by distance; the repulsive term depends
    on whether the obstacle lies in the TCP's direction of travel,
  - below d_ACT (or marker lost): free-drive hold, zero commanded rates,
    released with hysteresis at d_DCT.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import kinematics
from .kinematics import ArmModel, RobotState
from .transforms import unit

V_TCP_EPS = 1e-9  # below this TCP speed the obstacle direction is ill-defined


class CoincidentObstacleError(ValueError):
    """Obstacle and TCP coincide; the repulsive field is singular."""


class Case(enum.Enum):
    NO_AVOIDANCE = "no_avoidance"
    AVOID_TYPE1 = "avoid_type1"
    AVOID_TYPE2 = "avoid_type2"
    FDCM = "fdcm"


class ObstacleType(enum.Enum):
    TYPE1 = 1  # collision imminent: obstacle in the direction of travel
    TYPE2 = 2  # lateral / receding obstacle


@dataclass(frozen=True)
class ControllerParams:
    k_pc1: float = 0.2      # m/s, tanh amplitude
    k_pc2: float = 10.0     # 1/m, error scaling inside tanh
    tau: float = 11.0       # 1/m, repulsion attenuation; keep tau*d_at >= 3 for continuity
    theta_obs: float = math.radians(70.0)  # rad, obstacle-type threshold
    d_at: float = 0.30      # m, avoidance threshold distance
    d_act: float = 0.10     # m, critical activation distance (free-drive on)
    d_dct: float = 0.15     # m, critical deactivation distance (free-drive off)
    v_max: float = 0.2      # m/s, TCP speed cap
    rep_gain: float = 0.35  # m/s, repulsive speed scale (final command still capped at v_max)

    def __post_init__(self):
        if not (0.0 < self.d_act < self.d_dct <= self.d_at):
            raise ValueError(
                f"need 0 < d_act < d_dct <= d_at, got "
                f"({self.d_act}, {self.d_dct}, {self.d_at})"
            )
        if self.tau <= 0:
            raise ValueError("tau must be > 0")
        if not (0.0 < self.theta_obs < math.pi):
            raise ValueError("theta_obs must be in (0, pi)")
        if self.v_max <= 0:
            raise ValueError("v_max must be > 0")


@dataclass(frozen=True, eq=False)
class GoalSpec:
    x_g: np.ndarray
    xdot_g: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        xg = np.asarray(self.x_g, dtype=float).reshape(3)
        xdg = np.asarray(self.xdot_g, dtype=float).reshape(3)
        if not (np.all(np.isfinite(xg)) and np.all(np.isfinite(xdg))):
            raise ValueError("goal position/velocity must be finite")
        object.__setattr__(self, "x_g", xg)
        object.__setattr__(self, "xdot_g", xdg)


@dataclass(frozen=True, eq=False)
class ObstacleState:
    x_o: np.ndarray
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    visible: bool = True
    age: float = 0.0  # seconds since last observation

    def __post_init__(self):
        object.__setattr__(self, "x_o", np.asarray(self.x_o, dtype=float).reshape(3))
        object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=float).reshape(3))
        if not self.visible and self.age <= 0.0:
            raise ValueError("an invisible obstacle must have age > 0")


@dataclass(frozen=True, eq=False)
class ControlDecision:
    case: Case
    d_ro: float
    theta_c: float
    tcp_velocity_cmd: np.ndarray
    qdot_cmd: np.ndarray
    blend_weight: float
    tcp_stationary: bool = False  # classification fell back to Type1 (TCP at rest)


def cap_speed(v: np.ndarray, v_max: float) -> np.ndarray:
    """Scale v down to v_max, keeping its direction."""
    speed = float(np.linalg.norm(v))
    if speed > v_max:
        return v * (v_max / speed)
    return v


def position_velocity(params: ControllerParams, x_r, goal: GoalSpec) -> np.ndarray:
    """v_PC = xdot_G + k1*tanh(k2*(x_G - x_R)) componentwise, capped at v_max."""
    e = goal.x_g - np.asarray(x_r, dtype=float).reshape(3)
    v = goal.xdot_g + params.k_pc1 * np.tanh(params.k_pc2 * e)
    return cap_speed(v, params.v_max)


def position_controller(params: ControllerParams, x_r, goal: GoalSpec,
                        jac: np.ndarray, damping: float,
                        rate_caps=None) -> tuple[np.ndarray, np.ndarray]:
    """Position-controller TCP velocity and the joint rates realizing it."""
    v_pc = position_velocity(params, x_r, goal)
    qdot = _rates_for(jac, v_pc, damping, rate_caps)
    return v_pc, qdot


def _rates_for(jac: np.ndarray, v_linear: np.ndarray, damping: float, rate_caps) -> np.ndarray:
    # Full-twist target with zero commanded angular velocity.
    target = np.concatenate([v_linear, np.zeros(3)]) if jac.shape[0] == 6 else v_linear
    qdot = kinematics.damped_rates(jac, target, damping)
    if rate_caps is not None:
        qdot = kinematics.scale_to_rate_caps(qdot, rate_caps)
    return qdot


def classify_obstacle(v_tcp, x_r, x_o, theta_obs: float) -> tuple[ObstacleType, float, bool]:
    """Obstacle type from the angle between TCP velocity and the TCP->obstacle axis.

    Returns (type, theta_c, stationary). A TCP at rest cannot be classified;
    it is treated as Type1 (conservative) with the stationary flag set.
    """
    v = np.asarray(v_tcp, dtype=float).reshape(3)
    axis = np.asarray(x_o, dtype=float) - np.asarray(x_r, dtype=float)
    v_hat = unit(v, V_TCP_EPS)
    axis_hat = unit(axis)
    if v_hat is None or axis_hat is None:
        return ObstacleType.TYPE1, 0.0, True
    theta_c = float(np.arccos(np.clip(v_hat @ axis_hat, -1.0, 1.0)))
    # Boundary goes to Type1: the conservative side.
    kind = ObstacleType.TYPE1 if theta_c <= theta_obs else ObstacleType.TYPE2
    return kind, theta_c, False


def repulsive_velocity_type1(params: ControllerParams, x_r, x_o, v_tcp, x_g) -> np.ndarray:
    """Repulsion for an obstacle in the path: normal escape plus a tangential
    slide along the TCP velocity plus a goal-biased deflection, normalized to
    rep_gain. Degenerate (collinear) components drop out.
    """
    x_r = np.asarray(x_r, dtype=float).reshape(3)
    x_o = np.asarray(x_o, dtype=float).reshape(3)
    axis = x_o - x_r
    d = np.linalg.norm(axis)
    if d <= 0.0:
        raise CoincidentObstacleError("obstacle coincides with the TCP")
    axis = axis / d
    normal = -axis
    v = np.asarray(v_tcp, dtype=float).reshape(3)
    tangential = v - (v @ axis) * axis
    t_hat = unit(tangential)
    g = np.asarray(x_g, dtype=float).reshape(3) - x_r
    g_perp = g - (g @ axis) * axis
    g_hat = unit(g_perp)
    combined = normal.copy()
    if t_hat is not None:
        combined = combined + t_hat
    if g_hat is not None:
        combined = combined + g_hat
    # normal is orthogonal to both other unit parts, so |combined| >= 1 always
    return params.rep_gain * combined / np.linalg.norm(combined)


def repulsive_velocity_type2(params: ControllerParams, x_r, x_o) -> np.ndarray:
    """Pure normal repulsion away from the obstacle, magnitude rep_gain."""
    away = np.asarray(x_r, dtype=float).reshape(3) - np.asarray(x_o, dtype=float).reshape(3)
    d = np.linalg.norm(away)
    if d <= 0.0:
        raise CoincidentObstacleError("obstacle coincides with the TCP")
    return params.rep_gain * away / d


def blend(v_pc, v_rep, tau: float, d_ro: float) -> np.ndarray:
    """Convex combination v_pc*(1 - e^{-tau*d}) + v_rep*e^{-tau*d}."""
    if d_ro < 0:
        raise ValueError("d_ro must be >= 0")
    w = math.exp(-tau * d_ro)
    return np.asarray(v_pc, dtype=float) * (1.0 - w) + np.asarray(v_rep, dtype=float) * w


def fdcm_update(active: bool, d_ro: float, visible: bool, params: ControllerParams) -> bool:
    """Free-drive hysteresis: engage below d_ACT or on marker loss; release
    only when the marker is visible and d_RO has climbed past d_DCT."""
    if not visible or d_ro < params.d_act:
        return True
    if active:
        return not (visible and d_ro > params.d_dct)
    return False


class ApfController:
    """Behavior-tree step over one robot: selects the case, synthesizes the
    TCP velocity command and the joint rates for it.

    Stateless apart from configuration; the free-drive flag is threaded by
    the caller (pass the previous decision's state in, read it back out of
    the returned decision's case).
    """

    def __init__(self, model: ArmModel, params: ControllerParams,
                 damping: float = 1e-3, position_only_ik: bool = False,
                 staleness_budget: float = 0.5):
        self.model = model
        self.params = params
        self.damping = damping
        self.position_only_ik = position_only_ik
        self.staleness_budget = staleness_budget

    def step(self, robot: RobotState, goal: GoalSpec,
             obstacle: ObstacleState | None, fdcm_active: bool,
             jac: np.ndarray | None = None) -> ControlDecision:
        params = self.params
        x_r = robot.x_r
        if jac is None:
            jac = kinematics.jacobian(self.model, robot.joints.q)
        if self.position_only_ik:
            jac = jac[:3]

        if obstacle is None:
            v_pc, qdot = position_controller(params, x_r, goal, jac, self.damping,
                                             self.model.rate_caps)
            return ControlDecision(Case.NO_AVOIDANCE, math.inf, 0.0, v_pc, qdot, 0.0)

        d_ro = float(np.linalg.norm(obstacle.x_o - x_r))
        if d_ro <= 0.0:
            fdcm = True  # coincident obstacle: singular field, force free-drive
        else:
            fdcm = fdcm_update(fdcm_active, d_ro, obstacle.visible, params)

        if fdcm:
            return ControlDecision(Case.FDCM, d_ro, 0.0, np.zeros(3), np.zeros(6), 0.0)

        stale = (not obstacle.visible) and obstacle.age > self.staleness_budget
        if d_ro > params.d_at or stale:
            v_pc, qdot = position_controller(params, x_r, goal, jac, self.damping,
                                             self.model.rate_caps)
            return ControlDecision(Case.NO_AVOIDANCE, d_ro, 0.0, v_pc, qdot, 0.0)

        v_tcp = robot.tcp_twist[:3]
        kind, theta_c, stationary = classify_obstacle(v_tcp, x_r, obstacle.x_o, params.theta_obs)
        v_pc = position_velocity(params, x_r, goal)
        if kind is ObstacleType.TYPE1:
            v_rep = repulsive_velocity_type1(params, x_r, obstacle.x_o, v_tcp, goal.x_g)
            case = Case.AVOID_TYPE1
        else:
            v_rep = repulsive_velocity_type2(params, x_r, obstacle.x_o)
            case = Case.AVOID_TYPE2
        v_cmd = cap_speed(blend(v_pc, v_rep, params.tau, d_ro), params.v_max)
        qdot = _rates_for(jac, v_cmd, self.damping, self.model.rate_caps)
        return ControlDecision(case, d_ro, theta_c, v_cmd, qdot,
                               math.exp(-params.tau * d_ro), stationary)
