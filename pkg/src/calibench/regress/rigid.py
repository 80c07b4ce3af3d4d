"""Least-squares rigid alignment (rotation + translation) between point sets."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_ORTHO_TOL = 1e-12
_DEGENERACY_RATIO = 1e-9


@dataclass(frozen=True)
class RigidTransform:
    """x_b = rotation @ x_c + translation, with a proper rotation."""

    rotation: np.ndarray    # (3, 3)
    translation: np.ndarray  # (3,)

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=float)
        t = np.asarray(self.translation, dtype=float)
        if R.shape != (3, 3) or t.shape != (3,):
            raise ValueError("rotation must be 3x3 and translation a 3-vector")
        if np.max(np.abs(R.T @ R - np.eye(3))) > 1e-9:
            raise ValueError("rotation is not orthogonal")
        if abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise ValueError("rotation must have determinant +1")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    def apply(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        if p.ndim == 1:
            return self.rotation @ p + self.translation
        return p @ self.rotation.T + self.translation

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))


def fit_rigid(camera_pts, base_pts) -> RigidTransform:
    """Rotation and translation minimising sum |R x_c + t - x_b|^2.

    Solved in closed form via the SVD of the cross-covariance; a reflection
    in the solution is corrected by flipping the sign of the smallest
    singular direction.  Degenerate inputs (fewer than three points, or
    points concentrated on a line) are rejected.
    """
    A = np.asarray(camera_pts, dtype=float)
    B = np.asarray(base_pts, dtype=float)
    if A.shape != B.shape or A.ndim != 2 or A.shape[1] != 3:
        raise ValueError("need matching (n, 3) point arrays")
    if len(A) < 3:
        raise ValueError("need at least 3 point pairs")
    a_mean = A.mean(axis=0)
    b_mean = B.mean(axis=0)
    Ac = A - a_mean
    Bc = B - b_mean
    spread = np.linalg.svd(Ac, compute_uv=False)
    if spread[1] <= _DEGENERACY_RATIO * max(spread[0], 1.0):
        raise ValueError("point set is degenerate (coincident or collinear)")
    H = Ac.T @ Bc
    U, _, Vt = np.linalg.svd(H)
    d = np.sign(np.linalg.det(Vt.T @ U.T))
    R = Vt.T @ np.diag([1.0, 1.0, d]) @ U.T
    t = b_mean - R @ a_mean
    return RigidTransform(R, t)


def rigid_loss(tf: RigidTransform, camera_pts, base_pts) -> float:
    """Mean squared residual of the alignment, mm^2."""
    A = np.asarray(camera_pts, dtype=float)
    B = np.asarray(base_pts, dtype=float)
    r = tf.apply(A) - B
    return float(np.mean(np.sum(r * r, axis=1)))
