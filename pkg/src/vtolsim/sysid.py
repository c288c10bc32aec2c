"""Bench-test reproduction on synthetic data: generate wind-tunnel and
rotor-rig datasets from a truth model, then recover the force coefficients
with conjugate Bayesian linear regression (linear parameters) and a grid
search (side-force shape exponents), plus the airflow-probe gain fit.

Dataset convention: rows with u == 0 are whole-airframe runs with rotors
off (wing aerodynamics only); rows with u > 0 come from a rotor-only rig
(thrust and rotor side force, no wing).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from .config import D_PROP_LIFT, MASS
from .forcemodel import (AeroConstants, SideForceShape, airflow_angles,
                         flow_from_angles, predict_forces, regressor)
from .sensors import ProbeCal, ProbeReading, probe_forward

CSV_HEADER = "V,alpha,u,Fx,Fy,Fz,sigma"


class RankDeficientError(ValueError):
    """Design matrix cannot identify the requested coefficients."""


@dataclass
class TunnelDataset:
    v_inf: np.ndarray
    alpha: np.ndarray
    u: np.ndarray
    force: np.ndarray        # (N, 3), newtons
    sigma: np.ndarray        # (N,), newtons

    def __len__(self) -> int:
        return len(self.v_inf)

    def extend(self, other: "TunnelDataset") -> "TunnelDataset":
        return TunnelDataset(
            v_inf=np.concatenate([self.v_inf, other.v_inf]),
            alpha=np.concatenate([self.alpha, other.alpha]),
            u=np.concatenate([self.u, other.u]),
            force=np.vstack([self.force, other.force]),
            sigma=np.concatenate([self.sigma, other.sigma]))

    def to_csv(self, path) -> None:
        rows = np.column_stack([self.v_inf, self.alpha, self.u,
                                self.force, self.sigma])
        np.savetxt(path, rows, fmt="%.12g", delimiter=",",
                   header=CSV_HEADER, comments="")

    @classmethod
    def from_csv(cls, path) -> "TunnelDataset":
        raw = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
        if raw.shape[1] != 7:
            raise ValueError("expected 7 columns: " + CSV_HEADER)
        return cls(v_inf=raw[:, 0], alpha=raw[:, 1], u=raw[:, 2],
                   force=raw[:, 3:6], sigma=raw[:, 6])


@dataclass
class PosteriorFit:
    names: tuple
    mean: np.ndarray
    std: np.ndarray

    def as_dict(self) -> dict:
        return {n: (float(m), float(s))
                for n, m, s in zip(self.names, self.mean, self.std)}


@dataclass
class SideForceFit:
    c_s: float
    c_s_std: float
    k1: float
    k2: float
    residual: float


@dataclass
class ProbeFit:
    k: float
    linearity_residual: float    # fraction of full scale
    angle_est: np.ndarray


# ---------------------------------------------------------------------------
# Synthetic data generation

def synth_tunnel_data(theta_true, const: AeroConstants, shape: SideForceShape,
                      v_grid, alpha_grid, u_grid, sigma_noise: float,
                      rng: np.random.Generator) -> TunnelDataset:
    """Tunnel rows from the truth model plus i.i.d. Gaussian force noise.

    u_grid values of 0 produce wing rows (full aero, rotors off); positive
    values produce rotor-rig rows (thruster forces only).
    """
    vs, als, us, forces = [], [], [], []
    for u in np.atleast_1d(u_grid):
        for v in np.atleast_1d(v_grid):
            for al in np.atleast_1d(alpha_grid):
                vi = flow_from_angles(v, al, 0.0)
                flow = airflow_angles(vi)
                if u == 0.0:
                    phi = regressor(flow, 0.0, 0.0, const, shape)
                    f, _, _ = predict_forces(phi, theta_true)
                else:
                    phi = regressor(flow, 0.0, u, const, shape)
                    _, f, _ = predict_forces(phi, theta_true)
                vs.append(v)
                als.append(al)
                us.append(u)
                forces.append(const.mass * f)
    force = np.array(forces)
    if sigma_noise > 0:
        force = force + rng.normal(0.0, sigma_noise, size=force.shape)
    n = len(vs)
    return TunnelDataset(v_inf=np.array(vs), alpha=np.array(als),
                         u=np.array(us), force=force,
                         sigma=np.full(n, float(sigma_noise)))


# ---------------------------------------------------------------------------
# Conjugate Bayesian linear regression

@dataclass
class GaussianPrior:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def weak(cls, n: int, std: float = 100.0) -> "GaussianPrior":
        return cls(mean=np.zeros(n), std=np.full(n, std))


def _blr(x: np.ndarray, y: np.ndarray, sigma: np.ndarray,
         prior: GaussianPrior) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and std of weights under known Gaussian noise."""
    w = 1.0 / np.maximum(sigma, 1e-9) ** 2
    precision = np.diag(1.0 / prior.std**2) + (x.T * w) @ x
    cov = np.linalg.inv(precision)
    mean = cov @ (prior.mean / prior.std**2 + (x.T * w) @ y)
    return mean, np.sqrt(np.diag(cov))


def fit_aero_linear(ds: TunnelDataset, prior: GaussianPrior | None = None,
                    const: AeroConstants | None = None) -> PosteriorFit:
    """Posterior over the lift-line and drag-polar coefficients.

    Wing rows are nondimensionalized by dynamic pressure times wing area;
    the (lift, drag) observables decouple because the body-to-wind force
    rotation is orthogonal, so two independent regressions suffice.
    """
    const = const or AeroConstants()
    sel = (ds.u == 0.0) & (ds.v_inf > 0.0)
    if int(sel.sum()) < 20:
        raise RankDeficientError("need at least 20 wing rows with airflow")
    alpha = ds.alpha[sel]
    if len(np.unique(np.round(alpha, 9))) < 3:
        raise RankDeficientError("need at least 3 distinct angles of attack")
    qs = 0.5 * const.rho * ds.v_inf[sel] ** 2 * const.s_ref
    fx = ds.force[sel, 0] / qs
    fz = ds.force[sel, 2] / qs
    sa, ca = np.sin(alpha), np.cos(alpha)
    cl_obs = sa * fx - ca * fz
    cd_obs = -ca * fx - sa * fz
    sig = ds.sigma[sel] / qs

    x_lift = np.column_stack([np.ones_like(alpha), alpha])
    x_drag = np.column_stack([np.ones_like(alpha), alpha, alpha**2])
    pl = prior or GaussianPrior.weak(2)
    pd_ = GaussianPrior.weak(3) if prior is None else \
        GaussianPrior(mean=np.resize(prior.mean, 3), std=np.resize(prior.std, 3))
    mean_l, std_l = _blr(x_lift, cl_obs, sig, pl)
    mean_d, std_d = _blr(x_drag, cd_obs, sig, pd_)
    return PosteriorFit(names=("C_L0", "C_L1", "C_D0", "C_D1", "C_D2"),
                        mean=np.concatenate([mean_l, mean_d]),
                        std=np.concatenate([std_l, std_d]))


def fit_thrust(ds: TunnelDataset, mass: float = MASS,
               prior: GaussianPrior | None = None) -> PosteriorFit:
    """Vertical thrust coefficient from static rotor-rig rows (V == 0)."""
    sel = (ds.u > 0.0) & (ds.v_inf == 0.0)
    if int(sel.sum()) < 3:
        raise RankDeficientError("need at least 3 static rotor rows")
    x = (ds.u[sel] ** 2)[:, None]
    y = -ds.force[sel, 2] / mass
    sig = ds.sigma[sel] / mass
    mean, std = _blr(x, y, sig, prior or GaussianPrior.weak(1))
    return PosteriorFit(names=("C_Tz",), mean=mean, std=std)


# ---------------------------------------------------------------------------
# Side-force shape fit

K1_GRID_DEFAULT = np.linspace(0.5, 2.0, 301)            # step 0.005
K2_GRID_DEFAULT = np.arange(0.5, 6.0 + 1e-9, 0.05)      # step 0.05


def fit_sideforce(ds: TunnelDataset, d_prop: float = D_PROP_LIFT,
                  mass: float = MASS, k1_grid=K1_GRID_DEFAULT,
                  k2_grid=K2_GRID_DEFAULT) -> SideForceFit:
    """Exhaustive search over the shape exponents with a closed-form
    coefficient sub-fit in every cell; ties resolve to the smallest k1
    (argmin scan order).
    """
    sel = (ds.u > 0.0) & (ds.v_inf > 0.0)
    if int(sel.sum()) < 10:
        raise RankDeficientError("need at least 10 powered rows with airflow")
    alpha, v, u = ds.alpha[sel], ds.v_inf[sel], ds.u[sel]
    # in-plane tunnel flow: the lateral force angle is 0 or pi with alpha sign
    viy = np.zeros_like(alpha)
    viz = v * np.sin(alpha)
    beta_bar = np.arctan2(viy, viz)
    y = -(ds.force[sel, 0] * np.cos(beta_bar)
          + ds.force[sel, 1] * np.sin(beta_bar)) / mass
    w = 1.0 / np.maximum(ds.sigma[sel] / mass, 1e-9) ** 2

    k1s = np.asarray(k1_grid, dtype=float)
    k2s = np.asarray(k2_grid, dtype=float)
    shape_part = ((math.pi / 2.0) ** 2 - alpha**2)
    h = (u[None, :] ** k1s[:, None]) * (v[None, :] ** (2.0 - k1s[:, None])) \
        * (d_prop ** (2.0 + k1s[:, None])) * shape_part[None, :]

    best = (np.inf, 0, 0, 0.0, 0.0)
    yy = float((w * y * y).sum())
    for j, k2 in enumerate(k2s):
        g = h * (alpha + k2)[None, :]
        sgy = (g * (w * y)[None, :]).sum(axis=1)
        sgg = (g * g * w[None, :]).sum(axis=1)
        sgg = np.maximum(sgg, 1e-300)
        resid = yy - sgy**2 / sgg
        i = int(np.argmin(resid))
        if resid[i] < best[0]:
            best = (float(resid[i]), i, j, float(sgy[i] / sgg[i]),
                    float(1.0 / math.sqrt(sgg[i])))
    resid, i, j, c_s, c_s_std = best
    return SideForceFit(c_s=c_s, c_s_std=c_s_std, k1=float(k1s[i]),
                        k2=float(k2s[j]), residual=resid)


# ---------------------------------------------------------------------------
# Airflow-probe gain calibration

def synth_probe_sweep(angles, v_inf: float, cal: ProbeCal,
                      rng: np.random.Generator | None = None,
                      channel: str = "alpha",
                      samples_per_angle: int = 1) -> list[ProbeReading]:
    """Tunnel sweep over flow angles at fixed speed.

    samples_per_angle > 1 averages repeated readings at each set point, the
    way a calibration dwell does.
    """
    out = []
    for a in np.atleast_1d(angles):
        if channel == "alpha":
            vi = flow_from_angles(v_inf, float(a), 0.0)
        else:
            vi = flow_from_angles(v_inf, 0.0, float(a))
        reads = [probe_forward(vi, cal, rng) for _ in range(samples_per_angle)]
        out.append(ProbeReading(
            q_inf=float(np.mean([r.q_inf for r in reads])),
            q_alpha=float(np.mean([r.q_alpha for r in reads])),
            q_beta=float(np.mean([r.q_beta for r in reads]))))
    return out


def fit_probe_gain(angles, readings: list[ProbeReading],
                   channel: str = "alpha") -> ProbeFit:
    """Least-squares probe gain from a calibration sweep.

    The estimated flow angle is atan2(k q_ch, q_inf), so a 1-D bounded
    minimization over k suffices.  The reported linearity residual is the
    largest deviation of the estimated angle from its own best-fit line,
    as a fraction of the swept range.
    """
    angles = np.asarray(angles, dtype=float)
    if len(angles) < 5:
        raise ValueError("need at least 5 calibration angles")
    qi = np.array([r.q_inf for r in readings])
    qc = np.array([r.q_alpha if channel == "alpha" else r.q_beta
                   for r in readings])

    def cost(k: float) -> float:
        est = np.arctan2(k * qc, qi)
        return float(((est - angles) ** 2).sum())

    res = minimize_scalar(cost, bounds=(1e-2, 50.0), method="bounded",
                          options={"xatol": 1e-12})
    k = float(res.x)
    est = np.arctan2(k * qc, qi)
    coeffs = np.polyfit(angles, est, 1)
    line = np.polyval(coeffs, angles)
    span = float(angles.max() - angles.min())
    residual = float(np.abs(est - line).max() / span)
    return ProbeFit(k=k, linearity_residual=residual, angle_est=est)
