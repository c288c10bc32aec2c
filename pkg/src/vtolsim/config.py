"""Vehicle constants, fitted-coefficient defaults, and configuration loading.

All force coefficients used at runtime are *mass-normalized*: the model
predicts specific force in m/s^2, so thrust/side-force coefficients absorb
air density, propeller geometry, the linear throttle-to-rotor-speed gain,
and vehicle mass.  The raw bench-test coefficients and the conversion
constants are kept here so the normalization is reproducible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

GRAVITY = 9.81  # m/s^2, NED +z down

# Airframe (bench-measured)
MASS = 1.70          # kg
WING_AREA = 0.223    # m^2
WINGSPAN = 1.08      # m
RHO_AIR = 1.225      # kg/m^3, sea-level standard (test-day value unknown)

# Propellers and throttle-to-speed gains.  Throttle u in [0,1] maps linearly
# to rotor angular rate n = u * N_MAX (rad/s); the loaded full-throttle rates
# below are order-of-magnitude picks for the listed motor/prop combos.
D_PROP_LIFT = 0.1524    # m, 6" lift props (x4)
D_PROP_FRONT = 0.1778   # m, 7" forward prop
N_MAX_LIFT = 2370.0     # rad/s at u_z = 1
N_MAX_FRONT = 1660.0    # rad/s at u_x = 1
N_LIFT_ROTORS = 4

# Bench-fitted coefficients (mean, std) in raw bench units.
RAW_COEFF = {
    "C_Tx": (3.02e-3, 2.25e-5),
    "C_Tz": (2.87e-3, 5.00e-6),
    "C_S": (2.31e-5, 1.18e-5),
    "C_D0": (0.1551, 0.00394),
    "C_D1": (0.1782, 0.06518),
    "C_D2": (1.6000, 0.10820),
    "C_L0": (0.3705, 0.06523),
    "C_L1": (3.2502, 0.04434),
}

# Side-force shape exponents, frozen after fitting.
K1_SHAPE = 1.425
K2_SHAPE = 3.126

THETA_LABELS = ("C_Tx", "C_Tz", "C_S", "C_D0", "C_D1", "C_D2", "C_L0", "C_L1")
N_PARAMS = 8

# Default gain-matrix diagonal for the estimator covariance P0.
P0_DIAG_DEFAULT = np.array([200.0, 200.0, 0.1, 1.0, 5.0, 20.0, 0.1, 0.1])


def thrust_x_scale(rho: float = RHO_AIR, mass: float = MASS) -> float:
    """Raw C_Tx -> specific-force coefficient (m/s^2 at u_x = 1)."""
    return rho * D_PROP_FRONT**4 * N_MAX_FRONT**2 / mass


def thrust_z_scale(rho: float = RHO_AIR, mass: float = MASS) -> float:
    """Raw C_Tz -> specific-force coefficient, all lift rotors combined."""
    return rho * D_PROP_LIFT**4 * N_MAX_LIFT**2 * N_LIFT_ROTORS / mass


def sideforce_scale(k1: float = K1_SHAPE, rho: float = RHO_AIR,
                    mass: float = MASS) -> float:
    """Raw C_S -> specific-force coefficient for the combined lift rotors."""
    return rho * N_MAX_LIFT**k1 * N_LIFT_ROTORS / mass


def theta_nominal(rho: float = RHO_AIR, mass: float = MASS) -> np.ndarray:
    """Mass-normalized parameter vector from the raw bench fit means."""
    sx, sz, ss = thrust_x_scale(rho, mass), thrust_z_scale(rho, mass), sideforce_scale(rho=rho, mass=mass)
    scales = (sx, sz, ss, 1.0, 1.0, 1.0, 1.0, 1.0)
    return np.array([RAW_COEFF[n][0] * s for n, s in zip(THETA_LABELS, scales)])


def theta_posterior_std(rho: float = RHO_AIR, mass: float = MASS) -> np.ndarray:
    """Posterior stds of the bench fit, mass-normalized like the means."""
    sx, sz, ss = thrust_x_scale(rho, mass), thrust_z_scale(rho, mass), sideforce_scale(rho=rho, mass=mass)
    scales = (sx, sz, ss, 1.0, 1.0, 1.0, 1.0, 1.0)
    return np.array([RAW_COEFF[n][1] * s for n, s in zip(THETA_LABELS, scales)])


@dataclass
class VehicleConfig:
    mass: float = MASS
    s_ref: float = WING_AREA
    rho: float = RHO_AIR
    d_prop: float = D_PROP_LIFT
    k1: float = K1_SHAPE
    k2: float = K2_SHAPE
    inertia_diag: tuple[float, float, float] = (0.045, 0.025, 0.065)
    tau_max: float = 1.0          # N*m per axis
    eps_airspeed: float = 0.5     # m/s, below this flow angles read zero
    # 0: lateral side-force angle from atan2(v_iy, v_iz) as printed,
    # 1: alternative reading atan2(v_iy, v_ix)
    sideforce_angle_mode: int = 0


@dataclass
class GainConfig:
    lambda_p: float = 0.7
    lambda_q: float = 16.0
    k_v: float = 3.0
    k_omega: float = 2.0
    k_p: float = 3.0
    k_i: float = 0.6
    k_d: float = 0.1
    integrator_limit: float = 5.0
    omega_ref_cutoff_hz: float = 20.0


@dataclass
class AdaptationConfig:
    p0_diag: tuple = tuple(P0_DIAG_DEFAULT)
    forgetting: float = 0.05      # 1/s
    # prior-pull leakage; off by default, the parameter box already bounds
    # drift and any pull biases tracking when the prior is deliberately wrong
    damping: float = 0.0          # 1/s
    bound_sigmas: float = 3.0     # half-width of the parameter box, in posterior stds
    filter_cutoff_hz: float = 10.0
    gamma: float = 1.0            # attitude weight in the stability monitor


@dataclass
class SensorConfig:
    probe_gain: float = 2.0
    probe_noise_pa: float = 0.2
    accel_noise: float = 0.05     # m/s^2
    # blind-probe estimate decay; long holds dominate the fan-off recovery
    hold_decay_tau: float = 0.3   # s


@dataclass
class WindConfig:
    max_speed: float = 12.9                    # m/s at 100% fan throttle
    direction: tuple[float, float, float] = (-1.0, 0.0, 0.0)
    lag_tau: float = 0.5                       # s; 0 disables the lag
    # (start time s, fan throttle) pairs; None selects the named profile
    schedule: list | None = None
    profile: str = "comparison"


@dataclass
class ScenarioConfig:
    scheme: str = "composite"     # composite | frozen-gain | tracking | pid | pd
    duration: float = 50.0
    dt: float = 1.0 / 250.0
    seed: int = 0
    theta_seed: int | None = None  # separate stream for the initial estimate
    hover_alt: float = 1.5        # m above ground
    init_velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    theta_init: str = "nominal"   # nominal | random
    true_param_sigmas: float = 0.0  # plant-truth offset from nominal, in stds
    noise: bool = True
    actuator_lag_tau: float = 0.0   # s; 0 disables
    disturbance_amp: float = 0.0    # m/s^2 bound of the unmodeled force
    decimate: int = 1
    settle_time: float = 2.0        # s excluded from summary metrics
    vehicle: VehicleConfig = field(default_factory=VehicleConfig)
    gains: GainConfig = field(default_factory=GainConfig)
    adaptation: AdaptationConfig = field(default_factory=AdaptationConfig)
    sensors: SensorConfig = field(default_factory=SensorConfig)
    wind: WindConfig = field(default_factory=WindConfig)


class ConfigError(ValueError):
    """Raised for malformed or out-of-range configuration input."""


_SCHEMES = ("composite", "frozen-gain", "tracking", "pid", "pd")


def _update_dataclass(obj, data: dict, path: str):
    names = {f.name: f for f in fields(obj)}
    for key, val in data.items():
        if key not in names:
            raise ConfigError(f"unknown config key '{path}{key}'")
        cur = getattr(obj, key)
        if isinstance(val, dict) and hasattr(cur, "__dataclass_fields__"):
            _update_dataclass(cur, val, f"{path}{key}.")
        else:
            setattr(obj, key, val)


def load_scenario(path: str | Path | None = None,
                  overrides: dict | None = None) -> ScenarioConfig:
    """Build a ScenarioConfig from defaults, an optional JSON file, and overrides."""
    cfg = ScenarioConfig()
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
        _update_dataclass(cfg, data, "")
    if overrides:
        _update_dataclass(cfg, overrides, "")
    validate_scenario(cfg)
    return cfg


def validate_scenario(cfg: ScenarioConfig) -> None:
    if cfg.scheme not in _SCHEMES:
        raise ConfigError(f"scheme must be one of {_SCHEMES}, got '{cfg.scheme}'")
    if cfg.duration <= 0 or cfg.dt <= 0 or cfg.dt > 0.01:
        raise ConfigError("need duration > 0 and 0 < dt <= 0.01")
    if cfg.vehicle.mass <= 0 or cfg.vehicle.rho <= 0 or cfg.vehicle.s_ref <= 0:
        raise ConfigError("vehicle mass, rho, and s_ref must be positive")
    if not 0.0 < cfg.vehicle.k1 < 2.0:
        raise ConfigError("side-force exponent k1 must lie in (0, 2)")
    if cfg.wind.schedule is not None:
        times = [float(t) for t, _ in cfg.wind.schedule]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError("wind schedule times must be strictly increasing")
        if any(not 0.0 <= float(u) <= 1.0 for _, u in cfg.wind.schedule):
            raise ConfigError("wind schedule throttles must lie in [0, 1]")
    if cfg.decimate < 1:
        raise ConfigError("decimate must be >= 1")
    if not math.isfinite(cfg.hover_alt):
        raise ConfigError("hover_alt must be finite")
