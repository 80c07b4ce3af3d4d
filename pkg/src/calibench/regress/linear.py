"""Ordinary least squares baselines, with Euler-angle or quaternion inputs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..worldsim import Orientation

ANGLE_REPRS = ("euler", "quaternion")


def _quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array([w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
                     w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
                     w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
                     w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2])


def euler_to_quaternion(phi) -> np.ndarray:
    """Unit quaternion (w, x, y, z) for intrinsic yaw(z) -> pitch(y) -> roll(x)."""
    if isinstance(phi, Orientation):
        yaw, pitch, roll = phi.phi_y, phi.phi_p, phi.phi_r
    else:
        yaw, pitch, roll = np.asarray(phi, dtype=float)
    hy, hp, hr = np.radians([yaw, pitch, roll]) / 2.0
    q_yaw = np.array([np.cos(hy), 0.0, 0.0, np.sin(hy)])
    q_pitch = np.array([np.cos(hp), 0.0, np.sin(hp), 0.0])
    q_roll = np.array([np.cos(hr), np.sin(hr), 0.0, 0.0])
    q = _quat_mul(_quat_mul(q_yaw, q_pitch), q_roll)
    return q / np.linalg.norm(q)


def quaternion_to_matrix(q) -> np.ndarray:
    w, x, y, z = np.asarray(q, dtype=float)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def matrix_to_quaternion(M) -> np.ndarray:
    """Stable rotation-matrix to quaternion conversion (largest-pivot form)."""
    M = np.asarray(M, dtype=float)
    tr = np.trace(M)
    if tr > 0:
        s = np.sqrt(tr + 1.0) * 2.0
        q = np.array([0.25 * s,
                      (M[2, 1] - M[1, 2]) / s,
                      (M[0, 2] - M[2, 0]) / s,
                      (M[1, 0] - M[0, 1]) / s])
    else:
        i = int(np.argmax(np.diag(M)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(M[i, i] - M[j, j] - M[k, k] + 1.0) * 2.0
        q = np.empty(4)
        q[0] = (M[k, j] - M[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (M[j, i] + M[i, j]) / s
        q[1 + k] = (M[k, i] + M[i, k]) / s
    return q / np.linalg.norm(q)


def _features(inputs: np.ndarray, angle_repr: str) -> np.ndarray:
    """Feature rows from (n, 6) inputs for the chosen angle encoding."""
    X = np.asarray(inputs, dtype=float)
    if angle_repr == "euler":
        return X
    if angle_repr == "quaternion":
        quats = np.array([euler_to_quaternion(row[3:6]) for row in X])
        return np.hstack([X[:, :3], quats])
    raise ValueError(f"angle_repr must be one of {ANGLE_REPRS}, got {angle_repr!r}")


@dataclass(frozen=True)
class LinearModel:
    coef: np.ndarray       # (n_features, 3)
    intercept: np.ndarray  # (3,)
    angle_repr: str

    def predict(self, inputs) -> np.ndarray:
        F = _features(np.atleast_2d(inputs), self.angle_repr)
        return F @ self.coef + self.intercept


def fit_linear(data, angle_repr: str = "euler") -> LinearModel:
    """Least-squares affine map from (position, angles) to base position.

    A rank-deficient design matrix is rejected rather than silently solved
    through the pseudo-inverse.
    """
    X, Y = _as_xy(data)
    F = _features(X, angle_repr)
    if len(F) < F.shape[1] + 1:
        raise ValueError(f"need at least {F.shape[1] + 1} rows, got {len(F)}")
    A = np.hstack([F, np.ones((len(F), 1))])
    coefs, _, rank, _ = np.linalg.lstsq(A, Y, rcond=None)
    if rank < A.shape[1]:
        raise ValueError(f"design matrix is rank deficient (rank {rank} < {A.shape[1]})")
    return LinearModel(coef=coefs[:-1], intercept=coefs[-1], angle_repr=angle_repr)


def _as_xy(data) -> tuple[np.ndarray, np.ndarray]:
    if hasattr(data, "inputs") and hasattr(data, "targets"):
        return np.asarray(data.inputs, float), np.asarray(data.targets, float)
    X, Y = data
    return np.asarray(X, float), np.asarray(Y, float)
