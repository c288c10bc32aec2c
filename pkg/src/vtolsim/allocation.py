"""Force allocation: realize an inertial force command through a desired
attitude (wing lift prioritized along the measured airflow) plus throttle
commands for the masked thruster axes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .forcemodel import (AeroConstants, AirflowState, IDX_CL0, IDX_CL1, IDX_CS,
                         IDX_CTX, IDX_CTZ, SideForceShape, predict_forces,
                         regressor, sideforce_basis)
from .geom import rotation_about, yaw_of


class DegenerateGeometry(RuntimeError):
    """Airflow too slow or parallel to the force demand; no incident frame."""


@dataclass(frozen=True)
class AllocationConfig:
    alpha_max: float = 0.21          # rad, inside the linear-lift fit range
    v_min: float = 1.5               # m/s, below this the hover branch is used
    eps_cross: float = 1e-6          # relative cross-product degeneracy limit
    f_min: float = 1e-6              # m/s^2, minimum demand for a tilt solution

    def __post_init__(self):
        if not 0.0 < self.alpha_max < math.pi / 4:
            raise ValueError("alpha_max must lie in (0, pi/4)")


@dataclass
class AllocationResult:
    r_d: np.ndarray
    alpha_d: float
    u_x: float
    u_z: float
    residual: np.ndarray             # body frame, unmet specific force
    saturated: bool
    hover_branch: bool


def incident_frame(vi, f_bar_body, cfg: AllocationConfig) -> np.ndarray:
    """Orthonormal triad [x y z] with x along the airflow and y normal to the
    force demand, expressed in body axes."""
    vi = np.asarray(vi, dtype=float)
    f = np.asarray(f_bar_body, dtype=float)
    nv = np.linalg.norm(vi)
    if nv <= cfg.v_min:
        raise DegenerateGeometry(f"airspeed {nv:.2f} m/s below {cfg.v_min}")
    cross = np.cross(vi, f)
    nc = np.linalg.norm(cross)
    if nc <= cfg.eps_cross * nv * np.linalg.norm(f):
        raise DegenerateGeometry("force demand parallel to airflow")
    x_i = vi / nv
    y_i = cross / nc
    z_i = np.cross(x_i, y_i)
    return np.column_stack([x_i, y_i, z_i])


def desired_alpha(f_bar_body, z_i, v_inf: float, theta, const: AeroConstants,
                  cfg: AllocationConfig) -> float:
    """Angle of attack whose modeled lift meets the flow-normal force demand,
    clamped to the trusted range."""
    q = const.dyn_pressure_factor(v_inf)
    l0 = q * theta[IDX_CL0]
    l1 = q * theta[IDX_CL1]
    demand = -float(np.dot(f_bar_body, z_i))
    l_max = l0 + l1 * cfg.alpha_max
    if demand > l_max:
        return cfg.alpha_max
    return max((demand - l0) / l1, -cfg.alpha_max)


def desired_attitude(r, r_i, alpha_d: float) -> np.ndarray:
    """Rotate the incident frame about its lateral axis by the desired angle
    of attack and compose with the current attitude."""
    r_alpha = rotation_about([0.0, 1.0, 0.0], alpha_d)
    return np.asarray(r) @ r_i @ r_alpha


def hover_attitude(f_dem_inertial, yaw: float, r_current,
                   cfg: AllocationConfig) -> np.ndarray:
    """Multicopter tilt solution: body -z along the demand, yaw preserved."""
    f = np.asarray(f_dem_inertial, dtype=float)
    nf = np.linalg.norm(f)
    if nf < cfg.f_min:
        return np.asarray(r_current, dtype=float).copy()
    z_b = -f / nf
    x_c = np.array([math.cos(yaw), math.sin(yaw), 0.0])
    y_b = np.cross(z_b, x_c)
    ny = np.linalg.norm(y_b)
    if ny < 1e-9:
        return np.asarray(r_current, dtype=float).copy()
    y_b /= ny
    x_b = np.cross(y_b, z_b)
    return np.column_stack([x_b, y_b, z_b])


MASK = np.array([1.0, 0.0, 1.0])  # no lateral thruster axis


def solve_thrusters(f_bar, r, flow: AirflowState, theta, const: AeroConstants,
                    shape: SideForceShape, cfg: AllocationConfig
                    ) -> tuple[float, float, np.ndarray, bool]:
    """Throttles meeting the masked body-frame force demand at the current
    attitude.

    The vertical axis is solved first; the rotor side force it induces is
    then folded into the axial equation (the coupling is triangular in u_z).
    Returns (u_x, u_z, residual, saturated).
    """
    if theta[IDX_CTX] <= 0 or theta[IDX_CTZ] <= 0:
        raise ValueError("thrust coefficients must be positive")
    phi = regressor(flow, 0.0, 0.0, const, shape)
    _, _, f_aero = predict_forces(phi, theta)
    f_body = np.asarray(r).T @ np.asarray(f_bar, dtype=float)
    target = MASK * (f_body - f_aero)

    saturated = False
    dz = min(max(-target[2], 0.0), theta[IDX_CTZ])
    if dz != -target[2]:
        saturated = True
    u_z = math.sqrt(dz / theta[IDX_CTZ])

    side = theta[IDX_CS] * sideforce_basis(flow.alpha, flow.v_inf, u_z, shape) \
        * math.cos(flow.beta_bar)
    dx = target[0] + side
    dxc = min(max(dx, 0.0), theta[IDX_CTX])
    if dxc != dx:
        saturated = True
    u_x = math.sqrt(dxc / theta[IDX_CTX])

    phi_u = regressor(flow, u_x, u_z, const, shape)
    f_hat, _, _ = predict_forces(phi_u, theta)
    residual = f_body - f_hat
    return u_x, u_z, residual, saturated


def allocate(f_bar, r, flow: AirflowState, theta, const: AeroConstants,
             shape: SideForceShape, cfg: AllocationConfig) -> AllocationResult:
    """Full allocation: desired attitude plus throttle solution.

    Above the airspeed threshold the attitude comes from the incident-frame
    construction with lift-model angle of attack; otherwise from the hover
    tilt solution.  Throttles always come from the masked solve at the
    current attitude.
    """
    r = np.asarray(r, dtype=float)
    f_bar = np.asarray(f_bar, dtype=float)
    f_bar_body = r.T @ f_bar
    hover = True
    alpha_d = 0.0
    try:
        r_i = incident_frame(flow.vi, f_bar_body, cfg)
        alpha_d = desired_alpha(f_bar_body, r_i[:, 2], flow.v_inf, theta, const, cfg)
        r_d = desired_attitude(r, r_i, alpha_d)
        hover = False
    except DegenerateGeometry:
        phi = regressor(flow, 0.0, 0.0, const, shape)
        _, _, f_aero = predict_forces(phi, theta)
        r_d = hover_attitude(f_bar - r @ f_aero, yaw_of(r), r, cfg)

    u_x, u_z, residual, saturated = solve_thrusters(
        f_bar, r, flow, theta, const, shape, cfg)
    return AllocationResult(r_d=r_d, alpha_d=alpha_d, u_x=u_x, u_z=u_z,
                            residual=residual, saturated=saturated,
                            hover_branch=hover)
