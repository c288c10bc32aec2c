"""Incident-airflow quantities and the linear-in-parameters force model.

The model predicts specific body force as Phi(v_i, u_x, u_z) @ theta, where
the 3x8 basis Phi collects thrust, rotor side-force, drag, and lift terms
and theta is the mass-normalized coefficient vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._core import regressor as _regressor_kernel
from .config import (D_PROP_LIFT, K1_SHAPE, K2_SHAPE, MASS, RHO_AIR, WING_AREA)

EPS_AIRSPEED = 0.5  # m/s; flow angles are meaningless below this

# Index of each coefficient in the parameter vector
IDX_CTX, IDX_CTZ, IDX_CS = 0, 1, 2
IDX_CD0, IDX_CD1, IDX_CD2 = 3, 4, 5
IDX_CL0, IDX_CL1 = 6, 7


@dataclass(frozen=True)
class AeroConstants:
    rho: float = RHO_AIR
    s_ref: float = WING_AREA
    mass: float = MASS

    def __post_init__(self):
        if self.rho <= 0 or self.s_ref <= 0 or self.mass <= 0:
            raise ValueError("aero constants must be strictly positive")

    def dyn_pressure_factor(self, v_inf: float) -> float:
        """(1/2) rho S V^2 / m: dimensionless coefficient -> specific force."""
        return 0.5 * self.rho * self.s_ref * v_inf * v_inf / self.mass


@dataclass(frozen=True)
class SideForceShape:
    """Fixed rotor side-force shape: exponent pair and prop diameter."""

    k1: float = K1_SHAPE
    k2: float = K2_SHAPE
    d: float = D_PROP_LIFT

    def __post_init__(self):
        if not 0.0 < self.k1 < 2.0:
            raise ValueError("k1 must lie in (0, 2)")


@dataclass(frozen=True)
class AirflowState:
    """Incident velocity and derived flow quantities, body frame."""

    vi: np.ndarray
    v_inf: float
    alpha: float
    beta: float
    beta_bar: float


def incident_velocity(v, v_wind, r) -> np.ndarray:
    """Body-frame airspeed vector R^T (v - v_wind)."""
    return np.asarray(r).T @ (np.asarray(v, dtype=float) - np.asarray(v_wind, dtype=float))


def airflow_angles(vi, eps_v: float = EPS_AIRSPEED, angle_mode: int = 0) -> AirflowState:
    """Flow speed and angles from the body-frame incident velocity.

    Below eps_v the angles are forced to zero (the defining ratios are
    singular and no sensor resolves them there).  angle_mode selects the
    lateral side-force angle convention: 0 uses atan2(v_iy, v_iz), 1 the
    forward-referenced alternative atan2(v_iy, v_ix).
    """
    vi = np.asarray(vi, dtype=float)
    v_inf = float(np.linalg.norm(vi))
    if v_inf > eps_v:
        alpha = math.atan2(vi[2], vi[0])
        beta = math.asin(min(1.0, max(-1.0, vi[1] / v_inf)))
        beta_bar = math.atan2(vi[1], vi[0]) if angle_mode else math.atan2(vi[1], vi[2])
    else:
        alpha = beta = beta_bar = 0.0
    return AirflowState(vi=vi, v_inf=v_inf, alpha=alpha, beta=beta, beta_bar=beta_bar)


def flow_from_angles(v_inf: float, alpha: float, beta: float) -> np.ndarray:
    """Incident velocity with given speed and flow angles (principal range)."""
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    return v_inf * np.array([ca * cb, sb, sa * cb])


def sideforce_basis(alpha: float, v_inf: float, u_z: float,
                    shape: SideForceShape) -> float:
    """Rotor side-force basis: cubic in alpha with zeros at +-pi/2, scaled by
    throttle and airspeed powers fixed by the shape exponents."""
    if u_z < 0.0:
        raise ValueError("throttle must be non-negative")
    uz = min(u_z, 1.0)
    return (uz ** shape.k1) * (v_inf ** (2.0 - shape.k1)) * (shape.d ** (2.0 + shape.k1)) \
        * ((math.pi / 2.0) ** 2 - alpha * alpha) * (alpha + shape.k2)


def aero_coefficients(alpha: float, theta) -> tuple[float, float]:
    """(C_L, C_D) from the linear lift line and quadratic drag polar."""
    cl = theta[IDX_CL0] + theta[IDX_CL1] * alpha
    cd = theta[IDX_CD0] + theta[IDX_CD1] * alpha + theta[IDX_CD2] * alpha * alpha
    return float(cl), float(cd)


def kernel_params(const: AeroConstants, shape: SideForceShape,
                  eps_v: float = EPS_AIRSPEED, angle_mode: int = 0) -> np.ndarray:
    """Parameter block consumed by the core regressor kernel."""
    return np.array([const.rho, const.s_ref, const.mass, shape.k1, shape.k2,
                     shape.d, eps_v, float(angle_mode)])


def regressor(flow: AirflowState, u_x: float, u_z: float, const: AeroConstants,
              shape: SideForceShape, eps_v: float = EPS_AIRSPEED,
              angle_mode: int = 0) -> np.ndarray:
    """3x8 basis matrix mapping the parameter vector to specific body force."""
    pars = kernel_params(const, shape, eps_v, angle_mode)
    return _regressor_kernel(np.asarray(flow.vi, dtype=float), u_x, u_z, pars)


def regressor_from_vi(vi, u_x: float, u_z: float, pars: np.ndarray) -> np.ndarray:
    """Kernel-parameter variant used in per-step loops."""
    return _regressor_kernel(np.asarray(vi, dtype=float), u_x, u_z, pars)


def predict_forces(phi: np.ndarray, theta) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Total, thruster, and aerodynamic specific force from the basis.

    The split assigns the first three columns (thrust and rotor side force)
    to the thruster part and the rest to the aerodynamic part.
    """
    theta = np.asarray(theta, dtype=float)
    f_thrust = phi[:, :3] @ theta[:3]
    f_aero = phi[:, 3:] @ theta[3:]
    return f_thrust + f_aero, f_thrust, f_aero
