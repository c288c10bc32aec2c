"""Synthetic measurements: conic airflow probe, accelerometer, and the
shared first-order low-pass used for the prediction-error signals."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import RHO_AIR

EPS_FORWARD_FLOW = 0.5  # m/s minimum axial flow for a valid probe reading


class ReverseFlowError(RuntimeError):
    """Axial flow too small or negative: the probe is blind."""


class InvalidReadingError(ValueError):
    """Probe reading outside the physically meaningful domain."""


@dataclass(frozen=True)
class ProbeCal:
    k: float = 2.0
    rho: float = RHO_AIR
    noise_pa: float = 0.2

    def __post_init__(self):
        if self.k <= 0 or self.noise_pa < 0:
            raise ValueError("need k > 0 and noise_pa >= 0")


@dataclass(frozen=True)
class ProbeReading:
    q_inf: float
    q_alpha: float
    q_beta: float


def probe_forward(vi, cal: ProbeCal, rng: np.random.Generator | None = None) -> ProbeReading:
    """Differential pressures produced by incident velocity vi.

    Inverse of probe_invert: q_inf is dynamic pressure and the cross-channel
    pressures are proportional to the transverse velocity ratios.
    """
    vx, vy, vz = float(vi[0]), float(vi[1]), float(vi[2])
    if vx <= EPS_FORWARD_FLOW:
        raise ReverseFlowError(f"axial flow {vx:.2f} m/s below validity limit")
    q_inf = 0.5 * cal.rho * (vx * vx + vy * vy + vz * vz)
    q_beta = q_inf * vy / (cal.k * vx)
    q_alpha = q_inf * vz / (cal.k * vx)
    if rng is not None and cal.noise_pa > 0:
        n = rng.normal(0.0, cal.noise_pa, size=3)
        q_inf, q_alpha, q_beta = q_inf + n[0], q_alpha + n[1], q_beta + n[2]
    return ProbeReading(q_inf=q_inf, q_alpha=q_alpha, q_beta=q_beta)


def probe_invert(reading: ProbeReading, cal: ProbeCal) -> np.ndarray:
    """Incident velocity from the three differential pressures."""
    qi, qa, qb = reading.q_inf, reading.q_alpha, reading.q_beta
    if qi <= 0.0:
        raise InvalidReadingError("q_inf must be positive")
    ka, kb = cal.k * qa, cal.k * qb
    scale = math.sqrt(2.0 * (qi / cal.rho) / (qi * qi + kb * kb + ka * ka))
    return scale * np.array([qi, kb, ka])


def accel_measure(f_body, sigma: float, rng: np.random.Generator | None = None) -> np.ndarray:
    """Accelerometer sample: specific force plus white noise."""
    f = np.asarray(f_body, dtype=float)
    if rng is None or sigma <= 0:
        return f.copy()
    return f + rng.normal(0.0, sigma, size=f.shape)


class LowPass:
    """Discrete first-order low-pass, y += c (x - y) with c = 2 pi f_c dt.

    Applied element-wise, so filtering a matrix column-wise and contracting
    with a constant vector commutes with filtering the contracted signal.
    State initializes to the first sample.
    """

    def __init__(self, cutoff_hz: float):
        if cutoff_hz <= 0:
            raise ValueError("cutoff must be positive")
        self.cutoff_hz = cutoff_hz
        self.y: np.ndarray | None = None

    def update(self, x, dt: float):
        if dt <= 0:
            raise ValueError("dt must be positive")
        x = np.asarray(x, dtype=float)
        if self.y is None:
            self.y = x.copy()
            return self.y.copy()
        c = min(1.0, 2.0 * math.pi * self.cutoff_hz * dt)
        self.y += c * (x - self.y)
        return self.y.copy()

    def value(self):
        return None if self.y is None else self.y.copy()

    def reset(self):
        self.y = None


class AirspeedTracker:
    """Incident-velocity estimate from the probe with a blind-probe fallback.

    The inverted reading is smoothed by a first-order low-pass before use:
    at low dynamic pressure the raw flow-angle estimate is noise-dominated
    and would otherwise shake the attitude allocation.  When the probe
    reports reverse flow the last valid estimate decays exponentially
    toward zero (hover in still air carries no signal).
    """

    def __init__(self, cal: ProbeCal, decay_tau: float = 1.0,
                 smooth_cutoff_hz: float = 10.0):
        self.cal = cal
        self.decay_tau = decay_tau
        self._lp = LowPass(smooth_cutoff_hz) if smooth_cutoff_hz > 0 else None
        self.vi = np.zeros(3)

    def update(self, vi_true, dt: float, rng: np.random.Generator | None = None) -> np.ndarray:
        try:
            reading = probe_forward(vi_true, self.cal, rng)
            raw = probe_invert(reading, self.cal)
            self.vi = raw if self._lp is None else self._lp.update(raw, dt)
        except (ReverseFlowError, InvalidReadingError):
            self.vi = self.vi * math.exp(-dt / self.decay_tau)
            if self._lp is not None:
                self._lp.y = self.vi.copy()
        return self.vi.copy()
