"""Two-motor wearable gimbal that keeps the fiducial marker tilted to the
camera at fixed reference angles.

The lower motor rotates about the forearm axis (camera-y inclination), the
upper motor provides elevation (camera-x inclination). Regulation is a dead
band controller: no motion while an angle sits inside half the band around
its target, a rate-limited move toward the target otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .perception import CameraModel
from .transforms import Transform, rot_x, rot_y

# normal-extraction degeneracy threshold: cos of the elevation angle
_GIMBAL_LOCK_COS = 1e-9


@dataclass(frozen=True, eq=False)
class GimbalState:
    motor_angles: np.ndarray  # (lower, upper) rad
    limits: np.ndarray = field(
        default_factory=lambda: np.array([[-math.pi / 2, math.pi / 2]] * 2)
    )
    max_rate: float = 3.5  # rad/s, hobby-servo scale
    saturated: np.ndarray = field(default_factory=lambda: np.zeros(2, dtype=bool))

    def __post_init__(self):
        ang = np.asarray(self.motor_angles, dtype=float).reshape(2)
        lim = np.asarray(self.limits, dtype=float).reshape(2, 2)
        if np.any(ang < lim[:, 0]) or np.any(ang > lim[:, 1]):
            raise ValueError("motor angles outside limits")
        object.__setattr__(self, "motor_angles", ang)
        object.__setattr__(self, "limits", lim)
        object.__setattr__(self, "saturated", np.asarray(self.saturated, dtype=bool).reshape(2))


@dataclass(frozen=True)
class OrientationError:
    err_y: float  # marker angle about camera y minus target
    err_x: float  # marker angle about camera x minus target
    targets: tuple[float, float] = (math.radians(40.0), math.radians(20.0))

    def __post_init__(self):
        if not (math.isfinite(self.err_y) and math.isfinite(self.err_x)):
            raise ValueError("orientation errors must be finite")


def marker_angles(marker_rotation: np.ndarray, camera: CameraModel) -> tuple[float, float, bool]:
    """Camera-frame inclination of the marker normal, decomposed about camera
    y then x (the normal is Ry(angle_y) @ Rx(angle_x) @ (0,0,-1) in camera
    coordinates).

    Returns (angle_y, angle_x, degenerate). When the normal is parallel to
    the y decomposition axis the yaw-like angle is undefined; the degenerate
    flag tells the caller to hold its previous angles.
    """
    n_base = np.asarray(marker_rotation, dtype=float)[:, 2]
    n_c = camera.pose_in_base.rotation.T @ n_base
    sin_x = float(np.clip(n_c[1], -1.0, 1.0))
    angle_x = math.asin(sin_x)
    cos_x = math.cos(angle_x)
    if cos_x < _GIMBAL_LOCK_COS:
        return 0.0, angle_x, True
    angle_y = math.atan2(-n_c[0], -n_c[2])
    return angle_y, angle_x, False


def orientation_error(angle_y: float, angle_x: float,
                      targets: tuple[float, float] = (math.radians(40.0), math.radians(20.0))
                      ) -> OrientationError:
    return OrientationError(angle_y - targets[0], angle_x - targets[1], targets)


def hysteresis_step(state: GimbalState, error: OrientationError, band: float,
                    dt: float, axis_signs=(1.0, 1.0)) -> GimbalState:
    """One dead-band regulation step.

    Per axis: hold inside +-band/2; otherwise move the motor by the error
    magnitude (at most max_rate*dt), in the direction that reduces it given
    the configured axis sign (+1 means marker angle grows with motor angle).
    """
    if band <= 0:
        raise ValueError("band must be > 0")
    if dt <= 0:
        raise ValueError("dt must be > 0")
    half = band / 2.0
    errs = (error.err_y, error.err_x)
    angles = state.motor_angles.copy()
    saturated = np.zeros(2, dtype=bool)
    step_cap = state.max_rate * dt
    for axis in range(2):
        err = errs[axis]
        if abs(err) <= half:
            continue
        move = -math.copysign(min(abs(err), step_cap), err) * axis_signs[axis]
        target = angles[axis] + move
        lo, hi = state.limits[axis]
        pinned = min(max(target, lo), hi)
        saturated[axis] = pinned != target
        angles[axis] = pinned
    return GimbalState(angles, state.limits, state.max_rate, saturated)


def marker_pose(forearm_pose: Transform, state: GimbalState,
                mount: Transform | None = None) -> Transform:
    """Marker pose: forearm frame, lower motor roll about forearm x, upper
    motor pitch about the intermediate y, then the mounting offset."""
    lower = Transform(rot_x(state.motor_angles[0]), np.zeros(3))
    upper = Transform(rot_y(state.motor_angles[1]), np.zeros(3))
    pose = forearm_pose @ lower @ upper
    if mount is not None:
        pose = pose @ mount
    return pose
