"""Composite parameter adaptation: the estimate is driven jointly by the
velocity tracking error and the filtered force prediction error, with a
forgetting-factor gain update, leakage toward the prior, and projection
onto a fixed parameter box."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import N_PARAMS, P0_DIAG_DEFAULT

MODE_COMPOSITE = "composite"
MODE_FROZEN_GAIN = "frozen-gain"
MODE_TRACKING_ONLY = "tracking"


@dataclass
class AdaptationGains:
    p0_diag: np.ndarray = field(default_factory=lambda: P0_DIAG_DEFAULT.copy())
    forgetting: float = 0.05    # 1/s, exponential data discount in the gain update
    damping: float = 0.1        # 1/s, leakage toward theta0
    theta0: np.ndarray = field(default_factory=lambda: np.zeros(N_PARAMS))
    bounds_lo: np.ndarray = field(default_factory=lambda: np.full(N_PARAMS, -np.inf))
    bounds_hi: np.ndarray = field(default_factory=lambda: np.full(N_PARAMS, np.inf))

    def __post_init__(self):
        self.p0_diag = np.asarray(self.p0_diag, dtype=float)
        self.theta0 = np.asarray(self.theta0, dtype=float)
        self.bounds_lo = np.asarray(self.bounds_lo, dtype=float)
        self.bounds_hi = np.asarray(self.bounds_hi, dtype=float)
        if np.any(self.p0_diag <= 0):
            raise ValueError("P0 diagonal must be positive")
        if self.forgetting < 0 or self.damping < 0:
            raise ValueError("forgetting and damping must be non-negative")
        # eigenvalue guard for the explicit-Euler gain update
        self.p_min = 1e-4 * float(self.p0_diag.min())
        self.p_max = 100.0 * float(self.p0_diag.max())

    @classmethod
    def around(cls, theta0, sigma, n_sigmas: float = 3.0, **kw) -> "AdaptationGains":
        theta0 = np.asarray(theta0, dtype=float)
        sigma = np.asarray(sigma, dtype=float)
        return cls(theta0=theta0.copy(), bounds_lo=theta0 - n_sigmas * sigma,
                   bounds_hi=theta0 + n_sigmas * sigma, **kw)


@dataclass
class AdaptationState:
    theta: np.ndarray
    gain: np.ndarray                      # P, 8x8 SPD
    w_filt: np.ndarray = field(default_factory=lambda: np.zeros((3, N_PARAMS)))
    a_filt: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @classmethod
    def fresh(cls, theta_init, gains: AdaptationGains) -> "AdaptationState":
        return cls(theta=np.asarray(theta_init, dtype=float).copy(),
                   gain=np.diag(gains.p0_diag))


def prediction_error(w_filt, theta, a_filt) -> np.ndarray:
    """Filtered-model force prediction minus filtered accelerometer signal."""
    return w_filt @ theta - a_filt


def project_box(theta, lo, hi) -> np.ndarray:
    """Component-wise projection onto the parameter box (idempotent)."""
    return np.clip(theta, lo, hi)


def clamp_spd(p: np.ndarray, p_min: float, p_max: float) -> np.ndarray:
    """Symmetrize and clamp the eigenvalues into [p_min, p_max]."""
    p = 0.5 * (p + p.T)
    vals, vecs = np.linalg.eigh(p)
    if vals[0] >= p_min and vals[-1] <= p_max:
        return p
    vals = np.clip(vals, p_min, p_max)
    return (vecs * vals) @ vecs.T


def update(state: AdaptationState, phi, r, v_tilde, e, gains: AdaptationGains,
           dt: float, mode: str = MODE_COMPOSITE) -> AdaptationState:
    """One explicit-Euler step of the parameter and gain updates.

    composite:     theta  <- theta + dt P (Phi^T R^T v_err - W^T e - damping (theta - theta0))
                   P      <- P + dt (-P W^T W P + forgetting P), then SPD clamp
    frozen-gain:   same parameter law with P fixed at its initial value
    tracking:      theta  <- theta + dt P0 Phi^T R^T v_err
    The estimate is projected onto the bounds box after every step.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    phi = np.asarray(phi, dtype=float)
    drive_tracking = phi.T @ (np.asarray(r).T @ np.asarray(v_tilde, dtype=float))

    if mode == MODE_TRACKING_ONLY:
        state.theta = state.theta + dt * (gains.p0_diag * drive_tracking)
    elif mode in (MODE_COMPOSITE, MODE_FROZEN_GAIN):
        drive = drive_tracking - state.w_filt.T @ np.asarray(e, dtype=float) \
            - gains.damping * (state.theta - gains.theta0)
        state.theta = state.theta + dt * (state.gain @ drive)
        if mode == MODE_COMPOSITE:
            pw = state.gain @ state.w_filt.T
            p_new = state.gain + dt * (-(pw @ pw.T) + gains.forgetting * state.gain)
            state.gain = clamp_spd(p_new, gains.p_min, gains.p_max)
    else:
        raise ValueError(f"unknown adaptation mode '{mode}'")

    state.theta = project_box(state.theta, gains.bounds_lo, gains.bounds_hi)
    return state


def lyapunov_value(v_tilde, q0: float, theta_err, gain, gamma: float) -> float:
    """Monitored stability function: velocity, attitude, and weighted
    parameter error terms."""
    v_tilde = np.asarray(v_tilde, dtype=float)
    theta_err = np.asarray(theta_err, dtype=float)
    quad = float(theta_err @ np.linalg.solve(gain, theta_err))
    return float(0.5 * v_tilde @ v_tilde + (2.0 - 2.0 * q0) / gamma + 0.5 * quad)
