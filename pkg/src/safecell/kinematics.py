"""Serial-arm kinematics: forward kinematics, geometric Jacobian, damped
velocity-level inversion, and explicit-Euler joint integration.

The arm is described by six standard Denavit-Hartenberg rows; the default
model shipped in ``data/ur10.yaml`` uses the UR10 table, but nothing here is
specific to that arm.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .transforms import Transform

DOF = 6


class JointLimitError(ValueError):
    """A joint angle is outside the configured limits."""

    def __init__(self, joint_index: int, value: float, lo: float, hi: float):
        self.joint_index = joint_index
        super().__init__(
            f"joint {joint_index + 1} angle {value:.6g} rad outside "
            f"limits [{lo:.6g}, {hi:.6g}]"
        )


@dataclass(frozen=True, eq=False)
class JointState:
    q: np.ndarray
    qdot: np.ndarray
    timestamp: float = 0.0
    # per-joint flag: integration pinned this joint at a limit
    clamped: np.ndarray = field(default_factory=lambda: np.zeros(DOF, dtype=bool))

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float).reshape(DOF))
        object.__setattr__(self, "qdot", np.asarray(self.qdot, dtype=float).reshape(DOF))
        object.__setattr__(self, "clamped", np.asarray(self.clamped, dtype=bool).reshape(DOF))


@dataclass(frozen=True, eq=False)
class ArmModel:
    """DH rows are (a [m], d [m], alpha [rad], theta_offset [rad]), one per joint."""

    dh_rows: np.ndarray
    base_pose: Transform = field(default_factory=Transform.identity)
    joint_limits: np.ndarray = field(
        default_factory=lambda: np.array([[-2 * np.pi, 2 * np.pi]] * DOF)
    )
    rate_caps: np.ndarray = field(default_factory=lambda: np.full(DOF, np.pi))
    name: str = "arm"

    def __post_init__(self):
        rows = np.asarray(self.dh_rows, dtype=float)
        if rows.shape != (DOF, 4):
            raise ValueError(f"expected {DOF} DH rows of (a, d, alpha, theta_offset), got {rows.shape}")
        limits = np.asarray(self.joint_limits, dtype=float).reshape(DOF, 2)
        if np.any(limits[:, 0] >= limits[:, 1]):
            bad = int(np.argmax(limits[:, 0] >= limits[:, 1]))
            raise ValueError(f"joint {bad + 1} limits must satisfy lo < hi")
        caps = np.asarray(self.rate_caps, dtype=float).reshape(DOF)
        if np.any(caps <= 0):
            raise ValueError("rate caps must be positive")
        object.__setattr__(self, "dh_rows", rows)
        object.__setattr__(self, "joint_limits", limits)
        object.__setattr__(self, "rate_caps", caps)

    def check_limits(self, q: np.ndarray) -> None:
        q = np.asarray(q, dtype=float).reshape(DOF)
        for i in range(DOF):
            lo, hi = self.joint_limits[i]
            if q[i] < lo or q[i] > hi:
                raise JointLimitError(i, q[i], lo, hi)


@dataclass(frozen=True, eq=False)
class RobotState:
    """Joint state plus the derived TCP pose and twist (linear; angular) of the arm."""

    joints: JointState
    tcp_pose: Transform
    tcp_twist: np.ndarray  # 6-vector (vx, vy, vz, wx, wy, wz)

    @property
    def x_r(self) -> np.ndarray:
        return self.tcp_pose.translation


def _dh_matrix(a: float, d: float, alpha: float, theta: float) -> np.ndarray:
    ct, st = np.cos(theta), np.sin(theta)
    ca, sa = np.cos(alpha), np.sin(alpha)
    return np.array(
        [
            [ct, -st * ca, st * sa, a * ct],
            [st, ct * ca, -ct * sa, a * st],
            [0.0, sa, ca, d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def _chain(model: ArmModel, q: np.ndarray) -> list[np.ndarray]:
    """Base pose followed by the cumulative frame after each joint (7 matrices)."""
    frames = [model.base_pose.as_matrix()]
    t = frames[0]
    for i in range(DOF):
        a, d, alpha, off = model.dh_rows[i]
        t = t @ _dh_matrix(a, d, alpha, q[i] + off)
        frames.append(t)
    return frames


def forward_kinematics(model: ArmModel, q) -> Transform:
    """Base-frame TCP pose for joint angles q. Raises JointLimitError out of range."""
    q = np.asarray(q, dtype=float).reshape(DOF)
    model.check_limits(q)
    return Transform.from_matrix(_chain(model, q)[-1])


def jacobian(model: ArmModel, q) -> np.ndarray:
    """Geometric Jacobian (rows 0:3 linear, 3:6 angular) at q.

    Column i is the TCP twist per unit rate of joint i: z_{i-1} x (p_tcp - p_{i-1})
    stacked on z_{i-1}, with all quantities in the base frame.
    """
    q = np.asarray(q, dtype=float).reshape(DOF)
    model.check_limits(q)
    frames = _chain(model, q)
    p_tcp = frames[-1][:3, 3]
    jac = np.zeros((6, DOF))
    for i in range(DOF):
        z = frames[i][:3, 2]
        p = frames[i][:3, 3]
        jac[:3, i] = np.cross(z, p_tcp - p)
        jac[3:, i] = z
    return jac


def damped_rates(jac_rows: np.ndarray, target: np.ndarray, damping: float) -> np.ndarray:
    """Damped least-squares solve of jac_rows @ qdot = target.

    Minimizes ||J qdot - target||^2 + damping^2 ||qdot||^2. With damping 0 this
    falls back to the minimum-norm least-squares solution (exact inverse when
    J is square and full rank).
    """
    if damping < 0:
        raise ValueError("damping must be >= 0")
    j = np.asarray(jac_rows, dtype=float)
    v = np.asarray(target, dtype=float).reshape(j.shape[0])
    if not np.all(np.isfinite(j)) or not np.all(np.isfinite(v)):
        raise ValueError("non-finite Jacobian or target velocity")
    if damping == 0.0:
        qdot, *_ = np.linalg.lstsq(j, v, rcond=None)
        return qdot
    m = j @ j.T + (damping * damping) * np.eye(j.shape[0])
    return j.T @ np.linalg.solve(m, v)


def scale_to_rate_caps(qdot: np.ndarray, rate_caps: np.ndarray) -> np.ndarray:
    """Uniformly scale qdot so every component respects its cap (direction kept)."""
    qdot = np.asarray(qdot, dtype=float)
    caps = np.asarray(rate_caps, dtype=float)
    over = np.abs(qdot) / caps
    worst = over.max()
    if worst > 1.0:
        return qdot / worst
    return qdot


def solve_joint_rates(model: ArmModel, q, tcp_velocity, damping: float = 1e-3) -> np.ndarray:
    """Joint rates realizing a 6-vector TCP twist, damped and rate-capped."""
    v = np.asarray(tcp_velocity, dtype=float).reshape(6)
    qdot = damped_rates(jacobian(model, q), v, damping)
    return scale_to_rate_caps(qdot, model.rate_caps)


def solve_joint_rates_positional(model: ArmModel, q, linear_velocity, damping: float = 1e-3) -> np.ndarray:
    """Like solve_joint_rates but constrains only the 3 linear rows of J.

    Leaves orientation free; the full-twist variant with zero commanded
    angular velocity is the default elsewhere.
    """
    v = np.asarray(linear_velocity, dtype=float).reshape(3)
    qdot = damped_rates(jacobian(model, q)[:3], v, damping)
    return scale_to_rate_caps(qdot, model.rate_caps)


def integrate(model: ArmModel, state: JointState, qdot, dt: float) -> JointState:
    """Explicit-Euler step q' = q + qdot*dt, clamped to joint limits."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    qdot = np.asarray(qdot, dtype=float).reshape(DOF)
    raw = state.q + qdot * dt
    lo, hi = model.joint_limits[:, 0], model.joint_limits[:, 1]
    q_new = np.clip(raw, lo, hi)
    return JointState(
        q=q_new,
        qdot=qdot,
        timestamp=state.timestamp + dt,
        clamped=(raw < lo) | (raw > hi),
    )


def robot_state(model: ArmModel, joints: JointState) -> RobotState:
    """Bundle a joint state with its TCP pose and twist J @ qdot."""
    pose = forward_kinematics(model, joints.q)
    twist = jacobian(model, joints.q) @ joints.qdot
    return RobotState(joints=joints, tcp_pose=pose, tcp_twist=twist)


def load_arm(path) -> ArmModel:
    """Load an arm description file (YAML: dh rows, limits, rate caps, base pose)."""
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"arm description file not found: {p}")
    with open(p) as fh:
        doc = yaml.safe_load(fh)
    return _arm_from_dict(doc, str(p))


def builtin_arm(name: str = "ur10") -> ArmModel:
    """Arm model bundled with the package (currently just 'ur10')."""
    text = resources.files("safecell.data").joinpath(f"{name}.yaml").read_text()
    return _arm_from_dict(yaml.safe_load(text), f"builtin:{name}")


def _arm_from_dict(doc: dict, source: str) -> ArmModel:
    try:
        rows = np.array(
            [[r["a"], r["d"], r["alpha"], r.get("theta_offset", 0.0)] for r in doc["dh"]],
            dtype=float,
        )
        base = doc.get("base_pose", {})
        base_pose = Transform.identity()
        if base:
            from .transforms import rotation_from_rpy

            rpy = base.get("rpy", [0.0, 0.0, 0.0])
            base_pose = Transform(
                rotation_from_rpy(*[float(x) for x in rpy]),
                np.asarray(base.get("translation", [0.0, 0.0, 0.0]), dtype=float),
            )
        kwargs = {}
        if "joint_limits" in doc:
            kwargs["joint_limits"] = np.asarray(doc["joint_limits"], dtype=float)
        if "rate_caps" in doc:
            kwargs["rate_caps"] = np.asarray(doc["rate_caps"], dtype=float)
        return ArmModel(
            dh_rows=rows,
            base_pose=base_pose,
            name=doc.get("name", "arm"),
            **kwargs,
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"invalid arm description in {source}: {exc}") from exc
