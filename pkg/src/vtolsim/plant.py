"""Ground-truth rigid-body plant: 6-DOF integration under the true force
model, a fan-array wind schedule, and actuator semantics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._core import plant_rk4_step, regressor as _regressor_kernel
from .config import GRAVITY
from .forcemodel import AeroConstants, SideForceShape, incident_velocity, kernel_params

GRAVITY_NED = np.array([0.0, 0.0, GRAVITY])

SPEED_LIMIT = 100.0  # m/s; beyond this the state is declared diverged

_NO_DISTURBANCE = np.zeros(8)


class SimulationDiverged(RuntimeError):
    """State left the sane envelope (non-finite values or runaway speed)."""


@dataclass
class RigidBodyState:
    p: np.ndarray
    v: np.ndarray
    r: np.ndarray
    omega: np.ndarray

    @classmethod
    def hover(cls, altitude: float = 0.0) -> "RigidBodyState":
        return cls(p=np.array([0.0, 0.0, -altitude]), v=np.zeros(3),
                   r=np.eye(3), omega=np.zeros(3))

    def copy(self) -> "RigidBodyState":
        return RigidBodyState(self.p.copy(), self.v.copy(),
                              self.r.copy(), self.omega.copy())


@dataclass
class ActuatorCommand:
    u_x: float = 0.0
    u_z: float = 0.0
    tau: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def clamped(self, tau_max: float) -> "ActuatorCommand":
        return ActuatorCommand(
            u_x=min(max(self.u_x, 0.0), 1.0),
            u_z=min(max(self.u_z, 0.0), 1.0),
            tau=np.clip(self.tau, -tau_max, tau_max),
        )


@dataclass
class DisturbanceModel:
    """Bounded state-dependent specific force, smooth in (p, v).

    Component i is amp[i] * sin(c_p * p_i + c_v * v_i + phase_i), so the
    magnitude never exceeds |amp|.
    """

    amp: np.ndarray = field(default_factory=lambda: np.zeros(3))
    c_p: float = 0.9
    c_v: float = 0.6
    phase: np.ndarray = field(default_factory=lambda: np.array([0.0, 2.1, 4.2]))

    def params(self) -> np.ndarray:
        return np.array([self.amp[0], self.amp[1], self.amp[2],
                         self.c_p, self.c_v,
                         self.phase[0], self.phase[1], self.phase[2]])

    def eval(self, p, v) -> np.ndarray:
        return self.amp * np.sin(self.c_p * np.asarray(p) + self.c_v * np.asarray(v) + self.phase)


@dataclass
class PlantTruth:
    theta_true: np.ndarray
    const: AeroConstants
    shape: SideForceShape
    inertia: np.ndarray = field(default_factory=lambda: np.diag([0.045, 0.025, 0.065]))
    tau_max: float = 1.0
    disturbance: DisturbanceModel | None = None
    eps_airspeed: float = 0.5
    angle_mode: int = 0

    def __post_init__(self):
        self.inertia = np.asarray(self.inertia, dtype=float)
        self._inertia_inv = np.linalg.inv(self.inertia)
        self._pars = kernel_params(self.const, self.shape,
                                   self.eps_airspeed, self.angle_mode)

    @property
    def inertia_inv(self) -> np.ndarray:
        return self._inertia_inv

    @property
    def kernel_pars(self) -> np.ndarray:
        return self._pars


@dataclass
class WindSchedule:
    """Piecewise-constant fan throttle, optionally smoothed by a first-order
    lag, mapped linearly to wind speed along a fixed direction."""

    steps: list = field(default_factory=list)      # (start time s, throttle)
    max_speed: float = 12.9
    direction: np.ndarray = field(default_factory=lambda: np.array([-1.0, 0.0, 0.0]))
    lag_tau: float = 0.5

    def __post_init__(self):
        self.direction = np.asarray(self.direction, dtype=float)
        n = np.linalg.norm(self.direction)
        if n > 0:
            self.direction = self.direction / n
        times = [t for t, _ in self.steps]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("schedule times must be strictly increasing")
        if any(not 0.0 <= u <= 1.0 for _, u in self.steps):
            raise ValueError("throttle must lie in [0, 1]")
        # precompute the lagged throttle at each segment boundary
        self._starts = [0.0] + [float(t) for t, _ in self.steps]
        self._targets = [0.0] + [float(u) for _, u in self.steps]
        init = [0.0]
        if self.lag_tau > 0:
            for i in range(1, len(self._starts)):
                span = self._starts[i] - self._starts[i - 1]
                prev = self._targets[i - 1] + (init[i - 1] - self._targets[i - 1]) \
                    * math.exp(-span / self.lag_tau)
                init.append(prev)
        self._init = init

    def throttle_at(self, t: float) -> float:
        """Lagged fan throttle at time t (raw target when lag_tau == 0)."""
        i = 0
        for j in range(len(self._starts) - 1, -1, -1):
            if t >= self._starts[j]:
                i = j
                break
        if self.lag_tau <= 0:
            return self._targets[i]
        return self._targets[i] + (self._init[i] - self._targets[i]) \
            * math.exp(-(t - self._starts[i]) / self.lag_tau)

    def wind_at(self, t: float) -> np.ndarray:
        return self.direction * (self.max_speed * self.throttle_at(t))


def true_body_force(state: RigidBodyState, cmd: ActuatorCommand, v_wind,
                    truth: PlantTruth) -> np.ndarray:
    """Specific body force the plant actually produces (what an ideal
    accelerometer reads)."""
    vi = incident_velocity(state.v, v_wind, state.r)
    phi = _regressor_kernel(vi, cmd.u_x, cmd.u_z, truth.kernel_pars)
    f = phi @ truth.theta_true
    if truth.disturbance is not None:
        f = f + truth.disturbance.eval(state.p, state.v)
    return f


def step(state: RigidBodyState, cmd: ActuatorCommand, sched: WindSchedule,
         t: float, dt: float, truth: PlantTruth) -> RigidBodyState:
    """Advance the plant one control period with a zero-order-held command."""
    if not 0.0 < dt <= 0.01:
        raise ValueError("dt must lie in (0, 0.01]")
    c = cmd.clamped(truth.tau_max)
    winds = np.stack([sched.wind_at(t), sched.wind_at(t + 0.5 * dt),
                      sched.wind_at(t + dt)])
    dist = truth.disturbance.params() if truth.disturbance is not None else _NO_DISTURBANCE
    p, v, r, omega = plant_rk4_step(
        state.p, state.v, state.r, state.omega, c.u_x, c.u_z, c.tau,
        truth.theta_true, truth.inertia, truth.inertia_inv, GRAVITY_NED,
        winds, dt, truth.kernel_pars, dist)
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(v))
            and np.all(np.isfinite(omega))):
        raise SimulationDiverged(f"non-finite state at t={t:.3f}")
    if float(v @ v) > SPEED_LIMIT * SPEED_LIMIT:
        raise SimulationDiverged(f"speed exceeded {SPEED_LIMIT} m/s at t={t:.3f}")
    return RigidBodyState(p=p, v=v, r=r, omega=omega)
