"""Synthetic marker tracking: camera extrinsics, geometric visibility and a
calibrated measurement-noise model.

The camera is a pinhole looking along its +z axis. A marker is visible when
its center is inside the FOV frustum and range, its face is tilted toward the
camera by less than the incidence limit, and no occluder blocks the sight
line. Measurement noise is drawn per camera axis and rotated into the base
frame, mirroring how reprojection error behaves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .transforms import Transform, unit


class NotVisibleError(RuntimeError):
    """Requested data from an observation with no detection."""


@dataclass(frozen=True, eq=False)
class CameraModel:
    pose_in_base: Transform            # T_B^C: camera frame -> base frame
    horizontal_fov: float = math.radians(70.0)
    vertical_fov: float = math.radians(50.0)
    max_range: float = 3.0
    max_incidence: float = math.radians(60.0)

    def __post_init__(self):
        for fov in (self.horizontal_fov, self.vertical_fov):
            if not (0.0 < fov < math.pi):
                raise ValueError("FOV angles must be in (0, pi)")
        if self.max_range <= 0:
            raise ValueError("max_range must be > 0")

    @staticmethod
    def look_at(position, target, up=(0.0, 0.0, 1.0), **kwargs) -> "CameraModel":
        """Camera at `position` with +z boresight through `target`, +y image-down."""
        position = np.asarray(position, dtype=float).reshape(3)
        z = unit(np.asarray(target, dtype=float) - position)
        if z is None:
            raise ValueError("camera position and target coincide")
        x = unit(np.cross(z, np.asarray(up, dtype=float)))
        if x is None:
            # boresight parallel to up (straight-down camera): pick another reference
            x = unit(np.cross(z, np.array([1.0, 0.0, 0.0])))
        y = np.cross(z, x)
        pose = Transform(np.column_stack([x, y, z]), position)
        return CameraModel(pose_in_base=pose, **kwargs)


@dataclass(frozen=True, eq=False)
class NoiseModel:
    sigma_axes: np.ndarray = field(default_factory=lambda: np.zeros(3))  # m, per camera axis
    bias_axes: np.ndarray = field(default_factory=lambda: np.zeros(3))   # m, per camera axis
    seed: int = 0
    # optional growth of sigma with camera distance beyond reference_depth,
    # fractional per meter; 0 keeps the noise depth-independent
    depth_scale: float = 0.0
    reference_depth: float = 1.0

    def __post_init__(self):
        sig = np.asarray(self.sigma_axes, dtype=float).reshape(3)
        if np.any(sig < 0):
            raise ValueError("sigma components must be >= 0")
        if self.depth_scale < 0:
            raise ValueError("depth_scale must be >= 0")
        object.__setattr__(self, "sigma_axes", sig)
        object.__setattr__(self, "bias_axes", np.asarray(self.bias_axes, dtype=float).reshape(3))

    def sigma_at_depth(self, depth: float) -> np.ndarray:
        growth = 1.0 + self.depth_scale * max(0.0, depth - self.reference_depth)
        return self.sigma_axes * growth

    @staticmethod
    def from_mean_abs_targets(targets_m, seed: int = 0) -> "NoiseModel":
        """Sigmas hitting the requested per-axis mean absolute errors.

        For a zero-mean Gaussian, E|x| = sigma*sqrt(2/pi), so
        sigma = target*sqrt(pi/2).
        """
        t = np.asarray(targets_m, dtype=float).reshape(3)
        if np.any(t < 0):
            raise ValueError("targets must be >= 0")
        return NoiseModel(sigma_axes=t * math.sqrt(math.pi / 2.0), seed=seed)


@dataclass(frozen=True, eq=False)
class MarkerObservation:
    visible: bool
    position_base: np.ndarray | None
    orientation_base: np.ndarray | None  # 3x3 rotation
    incidence_angle: float
    timestamp: float


@dataclass(frozen=True, eq=False)
class SphereOccluder:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(3))

    def blocks(self, a: np.ndarray, b: np.ndarray) -> bool:
        return _point_segment_distance(self.center, a, b) < self.radius


@dataclass(frozen=True, eq=False)
class CapsuleOccluder:
    end_a: np.ndarray
    end_b: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "end_a", np.asarray(self.end_a, dtype=float).reshape(3))
        object.__setattr__(self, "end_b", np.asarray(self.end_b, dtype=float).reshape(3))

    def blocks(self, a: np.ndarray, b: np.ndarray) -> bool:
        return _segment_segment_distance(a, b, self.end_a, self.end_b) < self.radius


def _point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.linalg.norm(p - a))
    t = np.clip((p - a) @ ab / denom, 0.0, 1.0)
    return float(np.linalg.norm(p - (a + t * ab)))


def _segment_segment_distance(p1, q1, p2, q2) -> float:
    # Standard clamped closest-point computation between two segments.
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = float(d1 @ d1)
    e = float(d2 @ d2)
    f = float(d2 @ r)
    if a == 0.0 and e == 0.0:
        return float(np.linalg.norm(r))
    if a == 0.0:
        t = np.clip(f / e, 0.0, 1.0)
        s = 0.0
    else:
        c = float(d1 @ r)
        if e == 0.0:
            t = 0.0
            s = np.clip(-c / a, 0.0, 1.0)
        else:
            b = float(d1 @ d2)
            denom = a * e - b * b
            s = np.clip((b * f - c * e) / denom, 0.0, 1.0) if denom != 0.0 else 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = np.clip(-c / a, 0.0, 1.0)
            elif t > 1.0:
                t = 1.0
                s = np.clip((b - c) / a, 0.0, 1.0)
    closest1 = p1 + s * d1
    closest2 = p2 + t * d2
    return float(np.linalg.norm(closest1 - closest2))


def calibrate_extrinsics(t_b_m: Transform, t_c_m: Transform) -> Transform:
    """Camera extrinsics from one sighting of a reference marker at a known
    base-frame pose: T_B^C = T_B^M (T_C^M)^-1."""
    return t_b_m @ t_c_m.inverse()


def check_visibility(camera: CameraModel, marker_pose_base: Transform,
                     occluders=()) -> tuple[bool, float]:
    """Whether the marker is detectable, plus its incidence angle.

    The incidence angle (marker normal vs marker->camera ray) is returned
    even when the marker is out of frame.
    """
    marker_pos = marker_pose_base.translation
    cam_pos = camera.pose_in_base.translation
    normal = marker_pose_base.rotation[:, 2]
    ray = unit(cam_pos - marker_pos)
    if ray is None:
        return False, 0.0
    incidence = float(np.arccos(np.clip(normal @ ray, -1.0, 1.0)))

    p_c = camera.pose_in_base.inverse().apply(marker_pos)
    if p_c[2] <= 0.0:
        return False, incidence
    if abs(math.atan2(p_c[0], p_c[2])) > camera.horizontal_fov / 2.0:
        return False, incidence
    if abs(math.atan2(p_c[1], p_c[2])) > camera.vertical_fov / 2.0:
        return False, incidence
    if np.linalg.norm(p_c) > camera.max_range:
        return False, incidence
    if incidence > camera.max_incidence:
        return False, incidence
    for occ in occluders:
        if occ.blocks(cam_pos, marker_pos):
            return False, incidence
    return True, incidence


class ObservationPipeline:
    """Owns the seeded noise stream for one simulation's marker observations."""

    def __init__(self, camera: CameraModel, noise: NoiseModel):
        self.camera = camera
        self.noise = noise
        self._rng = np.random.default_rng(noise.seed)

    def observe(self, marker_pose_base: Transform, occluders=(), t: float = 0.0) -> MarkerObservation:
        visible, incidence = check_visibility(self.camera, marker_pose_base, occluders)
        if not visible:
            return MarkerObservation(False, None, None, incidence, t)
        depth = float(np.linalg.norm(
            marker_pose_base.translation - self.camera.pose_in_base.translation
        ))
        sigma = self.noise.sigma_at_depth(depth)
        noise_cam = self.noise.bias_axes + self._rng.normal(0.0, 1.0, 3) * sigma
        position = marker_pose_base.translation + self.camera.pose_in_base.rotate(noise_cam)
        return MarkerObservation(True, position, marker_pose_base.rotation.copy(), incidence, t)


def hand_position(observation: MarkerObservation, forearm_offset) -> np.ndarray:
    """Obstacle center estimate: marker position plus an offset expressed in
    the marker frame."""
    if not observation.visible:
        raise NotVisibleError("marker not visible; no hand position available")
    offset = np.asarray(forearm_offset, dtype=float).reshape(3)
    return observation.position_base + observation.orientation_base @ offset
