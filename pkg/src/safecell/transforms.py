"""Rigid-body transforms in SE(3).

A Transform is a rotation (3x3 orthonormal, det +1) plus a translation in
meters. Used for camera extrinsics, marker poses, arm base poses and TCP
poses throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Orthonormality / group-law tolerance for constructed rotations.
ROT_TOL = 1e-9


def _vec3(v) -> np.ndarray:
    a = np.asarray(v, dtype=float).reshape(3)
    return a


@dataclass(frozen=True, eq=False)
class Transform:
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        t = _vec3(self.translation)
        if not np.all(np.isfinite(r)) or not np.all(np.isfinite(t)):
            raise ValueError("transform has non-finite entries")
        err = np.abs(r @ r.T - np.eye(3)).max()
        det = np.linalg.det(r)
        if err > 1e-8 or abs(det - 1.0) > 1e-8:
            raise ValueError(
                f"rotation is not orthonormal with det +1 "
                f"(orthonormality error {err:.3g}, det {det:.12g})"
            )
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity() -> "Transform":
        return Transform(np.eye(3), np.zeros(3))

    @staticmethod
    def from_translation(t) -> "Transform":
        return Transform(np.eye(3), _vec3(t))

    @staticmethod
    def from_matrix(m: np.ndarray) -> "Transform":
        m = np.asarray(m, dtype=float)
        if m.shape != (4, 4):
            raise ValueError(f"expected 4x4 homogeneous matrix, got {m.shape}")
        return Transform(m[:3, :3], m[:3, 3])

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def compose(self, other: "Transform") -> "Transform":
        """self applied after other: (self @ other).apply(p) == self.apply(other.apply(p))."""
        return Transform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def __matmul__(self, other: "Transform") -> "Transform":
        return self.compose(other)

    def inverse(self) -> "Transform":
        rt = self.rotation.T
        return Transform(rt, -rt @ self.translation)

    def apply(self, point) -> np.ndarray:
        p = np.asarray(point, dtype=float)
        return p @ self.rotation.T + self.translation

    def rotate(self, vector) -> np.ndarray:
        """Apply only the rotation part (for directions, velocities)."""
        v = np.asarray(vector, dtype=float)
        return v @ self.rotation.T

    def almost_equal(self, other: "Transform", tol: float = ROT_TOL) -> bool:
        return (
            np.abs(self.rotation - other.rotation).max() <= tol
            and np.abs(self.translation - other.translation).max() <= tol
        )


def rot_x(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_from_rpy(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Z-Y-X convention: R = Rz(yaw) @ Ry(pitch) @ Rx(roll)."""
    return rot_z(yaw) @ rot_y(pitch) @ rot_x(roll)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform random rotation via a normalized random quaternion."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    x, y, z, w = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def unit(v, eps: float = 1e-12):
    """Normalize v; returns None when the norm is below eps."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n < eps:
        return None
    return v / n
