"""Rotation algebra for the controller: skew map, constrained attitude error,
group-preserving rotation integration.  Only what the control loop needs."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._core import error_quat, rot_exp


def skew(a) -> np.ndarray:
    """Matrix S(a) with S(a) @ b == cross(a, b)."""
    x, y, z = a
    return np.array([[0.0, -z, y],
                     [z, 0.0, -x],
                     [-y, x, 0.0]])


@dataclass
class ErrorQuat:
    """Constrained relative-rotation quaternion, scalar part positive."""

    q0: float
    qv: np.ndarray

    def angle(self) -> float:
        return 2.0 * math.acos(min(1.0, self.q0))


def attitude_error(r_des: np.ndarray, r: np.ndarray) -> ErrorQuat:
    """Error quaternion of r_des^T r with q0 > 0 enforced by sign flip."""
    q = error_quat(np.asarray(r_des, dtype=float), np.asarray(r, dtype=float))
    return ErrorQuat(q0=float(q[0]), qv=q[1:4].copy())


def integrate_rotation(r: np.ndarray, omega, dt: float) -> np.ndarray:
    """Advance r by the exact exponential of the body rate: r @ exp(skew(w*dt))."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    w = np.asarray(omega, dtype=float)
    return np.asarray(r, dtype=float) @ rot_exp(w * dt)


def rotation_log(r: np.ndarray) -> np.ndarray:
    """Rotation vector phi with exp(skew(phi)) == r, |phi| <= pi."""
    q = error_quat(np.eye(3), np.asarray(r, dtype=float))
    q0 = min(1.0, q[0])
    sin_half = math.sqrt(max(0.0, 1.0 - q0 * q0))
    if sin_half < 1e-12:
        return 2.0 * q[1:4]
    return (2.0 * math.acos(q0) / sin_half) * q[1:4]


def rotation_to_quat(r: np.ndarray) -> np.ndarray:
    """Unit quaternion [w, x, y, z] of r, scalar part non-negative."""
    return error_quat(np.eye(3), np.asarray(r, dtype=float))


def yaw_of(r: np.ndarray) -> float:
    """Heading of the body x axis projected on the horizontal plane."""
    return math.atan2(r[1, 0], r[0, 0])


def rotation_about(axis, angle: float) -> np.ndarray:
    """Rotation by angle about a unit axis."""
    ax = np.asarray(axis, dtype=float)
    return rot_exp(ax * angle)


def orthonormality_defect(r: np.ndarray) -> float:
    """max |R^T R - I|, a cheap SO(3) drift measure."""
    return float(np.abs(r.T @ r - np.eye(3)).max())


def is_rotation(r: np.ndarray, tol: float = 1e-9) -> bool:
    return orthonormality_defect(r) <= tol and abs(np.linalg.det(r) - 1.0) <= tol
