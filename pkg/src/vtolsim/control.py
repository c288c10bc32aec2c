"""Velocity/attitude tracking laws and the PID/PD baselines.

The force law outputs an inertial specific-force command; realizing it with
attitude and throttles is the allocation module's job.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import GRAVITY, GainConfig
from .geom import attitude_error, skew
from .sensors import LowPass

GRAVITY_NED = np.array([0.0, 0.0, GRAVITY])


def _diag(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.diag(np.full(3, float(x))) if x.ndim == 0 else np.diag(x) if x.ndim == 1 else x


@dataclass
class Gains:
    lambda_p: np.ndarray
    lambda_q: np.ndarray
    k_v: np.ndarray
    k_omega: np.ndarray
    k_p: np.ndarray
    k_i: np.ndarray
    k_d: np.ndarray
    integrator_limit: float = 5.0

    @classmethod
    def from_config(cls, cfg: GainConfig) -> "Gains":
        return cls(lambda_p=_diag(cfg.lambda_p), lambda_q=_diag(cfg.lambda_q),
                   k_v=_diag(cfg.k_v), k_omega=_diag(cfg.k_omega),
                   k_p=_diag(cfg.k_p), k_i=_diag(cfg.k_i), k_d=_diag(cfg.k_d),
                   integrator_limit=cfg.integrator_limit)


@dataclass
class ReferenceTrajectory:
    """Position reference; position-hold by default."""

    p_d: object = field(default=None)
    v_d: object = field(default=None)
    a_d: object = field(default=None)

    @classmethod
    def hold(cls, point) -> "ReferenceTrajectory":
        point = np.asarray(point, dtype=float)
        zero = np.zeros(3)
        return cls(p_d=lambda t: point, v_d=lambda t: zero, a_d=lambda t: zero)

    def at(self, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.p_d(t), self.v_d(t), self.a_d(t)


def reference_velocity(p, p_d, v_d, a_d, v, lambda_p) -> tuple[np.ndarray, np.ndarray]:
    """Reference velocity and its derivative from the position error.

    The derivative uses the measured velocity, so it is exact without
    differentiating the position error numerically.
    """
    v_r = v_d - lambda_p @ (np.asarray(p) - p_d)
    v_r_dot = a_d - lambda_p @ (np.asarray(v) - v_d)
    return v_r, v_r_dot


def reference_omega(r, r_d, omega_d, lambda_q) -> np.ndarray:
    """Reference body rate from the attitude error quaternion."""
    e = attitude_error(r_d, r)
    r_tilde = r_d.T @ r
    return r_tilde.T @ np.asarray(omega_d, dtype=float) - lambda_q @ e.qv


def force_command(v, v_r, v_r_dot, k_v) -> np.ndarray:
    """Inertial specific-force command cancelling gravity and velocity error."""
    return -GRAVITY_NED + v_r_dot - k_v @ (np.asarray(v) - v_r)


def moment_command(inertia, omega, omega_r, omega_r_dot, k_omega) -> np.ndarray:
    """Body torque command with gyroscopic feedforward."""
    omega = np.asarray(omega, dtype=float)
    j_omega = inertia @ omega
    return inertia @ omega_r_dot - skew(j_omega) @ omega_r - k_omega @ (omega - omega_r)


def pid_force_command(v_tilde, v_tilde_dot, integral, gains: Gains) -> np.ndarray:
    """Multirotor-style PID force law; PD is the special case k_i = 0."""
    return (-GRAVITY_NED - gains.k_p @ v_tilde - gains.k_d @ v_tilde_dot
            - gains.k_i @ integral)


class FilteredDerivative:
    """Backward difference smoothed by a first-order low-pass."""

    def __init__(self, cutoff_hz: float):
        self._lp = LowPass(cutoff_hz)
        self._prev = None

    def update(self, x, dt: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        raw = np.zeros_like(x) if self._prev is None else (x - self._prev) / dt
        self._prev = x.copy()
        return self._lp.update(raw, dt)


class ErrorIntegrator:
    """Velocity-error integral with a component-wise anti-windup clamp."""

    def __init__(self, limit: float):
        self.limit = limit
        self.value = np.zeros(3)

    def update(self, v_tilde, dt: float) -> np.ndarray:
        self.value = np.clip(self.value + np.asarray(v_tilde) * dt,
                             -self.limit, self.limit)
        return self.value.copy()
