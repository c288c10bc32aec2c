"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with -s to see them on success).

The expensive closed-loop runs are shared through module fixtures; every
tolerance is fixed here, not tuned elsewhere.
"""

import time

import numpy as np
import pytest

from vtolsim.adaptation import AdaptationState
from vtolsim.allocation import (AllocationConfig, DegenerateGeometry,
                                desired_alpha, incident_frame, solve_thrusters)
from vtolsim.config import ScenarioConfig, theta_nominal
from vtolsim.forcemodel import (AeroConstants, SideForceShape, airflow_angles,
                                predict_forces, regressor)
from vtolsim.plant import (ActuatorCommand, PlantTruth, RigidBodyState,
                           WindSchedule, step as plant_step)
from vtolsim.runner import (build_schedule, convergence_study, run_scenario,
                            wind_plateaus)
from vtolsim.sensors import ProbeCal, probe_forward, probe_invert
from vtolsim.sysid import (fit_aero_linear, fit_probe_gain, fit_sideforce,
                           synth_probe_sweep, synth_tunnel_data)

from oracles import direct_body_force, random_rotation

CONST = AeroConstants()
SHAPE = SideForceShape()
THETA = theta_nominal()
SEEDS = (0, 1, 2, 3, 4)
E_BOUND = 0.5          # m/s^2, about 0.05 g
RUNTIME_BOUND = 30.0   # s wall per scenario run
K_V_MIN = 3.0          # smallest velocity-loop eigenvalue in the default gains


def report(num: int, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {num} {'PASS' if ok else 'FAIL'}: {detail}")


def comparison_cfg(scheme: str, seed: int) -> ScenarioConfig:
    cfg = ScenarioConfig(scheme=scheme, duration=50.0, seed=seed,
                         true_param_sigmas=2.0, noise=True)
    cfg.wind.profile = "comparison"
    return cfg


@pytest.fixture(scope="module")
def comparison_runs():
    """Lazy cache of wind-ladder comparison runs keyed by (scheme, seed)."""
    cache = {}

    def get(scheme, seed):
        if (scheme, seed) not in cache:
            cache[(scheme, seed)] = run_scenario(comparison_cfg(scheme, seed))
        return cache[(scheme, seed)]

    return get


def plateau_windows(duration=50.0):
    sched = build_schedule(comparison_cfg("composite", 0))
    return wind_plateaus(sched, duration)


def test_criterion_1_prediction_error_bound(comparison_runs):
    worst = 0.0
    runtime = 0.0
    for scheme in ("composite", "frozen-gain"):
        res = comparison_runs(scheme, 0)
        t = res.col("t")
        perr = res.pred_err_norm()
        for start, end, _ in plateau_windows():
            win = (t >= start + 2.0) & (t < end)
            worst = max(worst, float(perr[win].mean()))
        runtime = max(runtime, res.summary["wall_time_s"])
    ok = worst <= E_BOUND and runtime < RUNTIME_BOUND
    report(1, ok, f"worst plateau mean prediction error {worst:.3f} m/s^2 "
                  f"(bound {E_BOUND}), slowest run {runtime:.1f} s")
    assert worst <= E_BOUND
    assert runtime < RUNTIME_BOUND


def test_criterion_2_controller_ordering(comparison_runs):
    order_hits, overshoot_hits = 0, 0
    for seed in SEEDS:
        rms = {s: comparison_runs(s, seed).summary["rms_verr"]
               for s in ("composite", "tracking", "pd")}
        if rms["composite"] <= rms["tracking"] <= rms["pd"]:
            order_hits += 1
        post = {}
        for s in ("composite", "pid"):
            res = comparison_runs(s, seed)
            t = res.col("t")
            win = (t >= 40.0) & (t <= 50.0)
            post[s] = float(res.verr_norm()[win].max())
        if post["pid"] >= 1.25 * post["composite"]:
            overshoot_hits += 1
    ok = order_hits >= 4 and overshoot_hits >= 4
    report(2, ok, f"rms ordering held on {order_hits}/5 seeds, "
                  f"PID fan-off overshoot exceeded 1.25x on {overshoot_hits}/5")
    assert order_hits >= 4
    assert overshoot_hits >= 4


def test_criterion_3_parameter_convergence():
    cfg = ScenarioConfig(scheme="composite", duration=45.0, seed=1,
                         true_param_sigmas=2.0, noise=True, theta_init="random")
    cfg.wind.profile = "convergence"
    out = convergence_study(cfg, n_runs=7)
    idx = {"C_Tz": 1, "C_L0": 6, "C_L1": 7}
    ratios = {name: out["std"][-1, i] / out["std"][0, i] for name, i in idx.items()}
    ok = all(r <= 0.5 for r in ratios.values())
    report(3, ok, "final/initial estimate spread " +
           ", ".join(f"{n}={r:.2f}" for n, r in ratios.items()) + " (bound 0.5)")
    assert all(r <= 0.5 for r in ratios.values()), ratios


def _fit_decay(t, v, t_step, horizon=4.0):
    """Exponential rate over the first e-fold after the post-step peak."""
    s = (t >= t_step) & (t < t_step + horizon)
    tv, vv = t[s], v[s]
    ipk = int(np.argmax(vv[:int(1.5 * 250)]))
    pk = vv[ipk]
    floor = np.median(vv[-100:])
    if pk < 6.0 * floor:
        return None
    target = max(pk / np.e, 2.0 * floor)
    rest = vv[ipk:]
    below = np.nonzero(rest <= target)[0]
    if not len(below) or below[0] < 13:
        return None
    iend = int(below[0])
    slope = np.polyfit(tv[ipk:ipk + iend] - tv[ipk], np.log(rest[:iend]), 1)[0]
    return -slope


def test_criterion_4_lyapunov_trapping():
    cfg = comparison_cfg("composite", 1)
    cfg.noise = False
    cfg.wind.lag_tau = 0.0   # worst-case pure steps
    res = run_scenario(cfg)
    t = res.col("t")
    lyap = res.col("lyap")
    verr = res.verr_norm()

    worst_ratio = 0.0
    for start, end, _ in plateau_windows():
        s = (t >= start) & (t < end)
        lv = lyap[s]
        prev_max = np.concatenate([[lv[0]], np.maximum.accumulate(lv)[:-1]])
        after = t[s] >= start + 2.0
        worst_ratio = max(worst_ratio, float(
            np.max((lv / np.maximum(prev_max, 1e-15))[after])))

    rates = []
    for t_step in [5.0, 15.0, 20.0, 25.0, 30.0, 40.0]:
        r = _fit_decay(t, verr, t_step)
        if r is not None:
            rates.append(r)
    ok = worst_ratio <= 1.05 and len(rates) >= 3 and min(rates) >= 0.5 * K_V_MIN
    report(4, ok, f"peak envelope ratio {worst_ratio:.3f} (bound 1.05); "
                  f"{len(rates)} fitted decays, slowest {min(rates):.2f} /s "
                  f"(bound {0.5 * K_V_MIN})")
    assert worst_ratio <= 1.05
    assert len(rates) >= 3
    assert min(rates) >= 0.5 * K_V_MIN


def test_criterion_5_regressor_oracle_equivalence():
    rng = np.random.default_rng(2024)
    n = 100_000
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(n):
        vi = rng.normal(0, 6, 3)
        u_x, u_z = rng.uniform(size=2)
        phi = regressor(airflow_angles(vi), u_x, u_z, CONST, SHAPE)
        ours = phi @ THETA
        ref, _, _ = direct_body_force(vi, u_x, u_z, THETA, CONST.rho,
                                      CONST.s_ref, CONST.mass, SHAPE.k1,
                                      SHAPE.k2, SHAPE.d)
        worst = max(worst, float(np.abs(ours - ref).max()))
    wall = time.perf_counter() - t0
    ok = worst <= 1e-10 and wall < 5.0
    report(5, ok, f"max |model - direct| {worst:.2e} over {n} inputs "
                  f"(bound 1e-10), {wall:.1f} s (bound 5 s)")
    assert worst <= 1e-10
    assert wall < 5.0


def test_criterion_6_allocation_exactness():
    rng = np.random.default_rng(7)
    cfg = AllocationConfig()
    n_hit = 0
    worst_resid, worst_side, worst_lift = 0.0, 0.0, 0.0
    while n_hit < 10_000:
        r = random_rotation(rng)
        vi = rng.normal(0, 4, 3)
        flow = airflow_angles(vi)
        u_x, u_z = rng.uniform(0.05, 0.95, 2)
        phi = regressor(flow, u_x, u_z, CONST, SHAPE)
        f_b, _, _ = predict_forces(phi, THETA)
        f_bar = r @ f_b
        u_x2, u_z2, resid, sat = solve_thrusters(f_bar, r, flow, THETA,
                                                 CONST, SHAPE, cfg)
        if sat:
            continue
        n_hit += 1
        worst_resid = max(worst_resid, float(np.linalg.norm(resid * [1, 0, 1])))
        try:
            r_i = incident_frame(vi, r.T @ f_bar, cfg)
        except DegenerateGeometry:
            continue
        worst_side = max(worst_side, abs(float((r.T @ f_bar) @ r_i[:, 1])))
        a_d = desired_alpha(r.T @ f_bar, r_i[:, 2], flow.v_inf, THETA, CONST, cfg)
        if abs(a_d) < cfg.alpha_max:
            q = CONST.dyn_pressure_factor(flow.v_inf)
            lift = q * (THETA[6] + THETA[7] * a_d)
            demand = -float((r.T @ f_bar) @ r_i[:, 2])
            worst_lift = max(worst_lift, abs(lift - demand))
    ok = worst_resid < 1e-6 and worst_side < 1e-12 and worst_lift < 1e-9
    report(6, ok, f"masked residual {worst_resid:.1e} (<1e-6), lateral "
                  f"projection {worst_side:.1e} (<1e-12), lift match "
                  f"{worst_lift:.1e} (<1e-9)")
    assert worst_resid < 1e-6
    assert worst_side < 1e-12
    assert worst_lift < 1e-9


def test_criterion_7_sensor_roundtrip_and_gain_fit():
    cal = ProbeCal(k=2.0, noise_pa=0.0)
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(1000):
        vi = np.array([rng.uniform(1.0, 12.0), rng.normal(0, 2), rng.normal(0, 2)])
        back = probe_invert(probe_forward(vi, cal), cal)
        worst = max(worst, float(np.abs(back - vi).max()))

    angles = np.deg2rad(np.linspace(-20, 20, 17))
    noisy = ProbeCal(k=2.0, noise_pa=0.2)
    k_errs, lin_resids = [], []
    for seed in range(10):
        readings = synth_probe_sweep(angles, 9.0, noisy, np.random.default_rng(seed),
                                     samples_per_angle=25)
        fit = fit_probe_gain(angles, readings)
        k_errs.append(abs(fit.k - 2.0) / 2.0)
        lin_resids.append(fit.linearity_residual)
    k_err = float(np.median(k_errs))
    lin = float(max(lin_resids))
    ok = worst < 1e-9 and k_err < 0.02 and lin < 0.02
    report(7, ok, f"roundtrip error {worst:.1e} (<1e-9), gain fit error "
                  f"{100 * k_err:.2f}% (<2%), linearity residual {100 * lin:.2f}% (<2%)")
    assert worst < 1e-9
    assert k_err < 0.02
    assert lin < 0.02


def test_criterion_8_sysid_recovery():
    alphas = np.deg2rad(np.arange(-45, 46, 5))
    expect = np.array([THETA[6], THETA[7], THETA[3], THETA[4], THETA[5]])
    hits = 0
    for seed in range(100):
        ds = synth_tunnel_data(THETA, CONST, SHAPE, [3.0, 6.0, 9.0], alphas,
                               [0.0], 0.05, np.random.default_rng(seed))
        fit = fit_aero_linear(ds)
        if np.all(np.abs(fit.mean - expect) <= 3.0 * fit.std):
            hits += 1

    rotor = synth_tunnel_data(THETA, CONST, SHAPE, [0.0, 3.0, 6.0, 9.0],
                              np.deg2rad(np.arange(-45, 46, 15)),
                              [0.4, 0.6, 0.8], 0.0, np.random.default_rng(0))
    side = fit_sideforce(rotor)
    grid_ok = abs(side.k1 - SHAPE.k1) <= 0.005 + 1e-12 \
        and abs(side.k2 - SHAPE.k2) <= 0.05 + 1e-12
    ok = hits >= 99 and grid_ok
    report(8, ok, f"aero posterior covered truth in {hits}/100 trials (>=99); "
                  f"shape recovered at ({side.k1:.3f}, {side.k2:.2f}) "
                  f"vs ({SHAPE.k1}, {SHAPE.k2}) within one cell: {grid_ok}")
    assert hits >= 99
    assert grid_ok


def test_criterion_9_numerical_hygiene(tmp_path):
    # (a) attitude drift and estimator-gain health over a 60 s closed loop
    cfg = ScenarioConfig(scheme="composite", duration=60.0, seed=2,
                         true_param_sigmas=2.0, noise=True)
    cfg.wind.schedule = [(5.0, 0.3), (20.0, 0.6), (40.0, 0.2)]
    drift = 0.0
    gain_sym = 0.0
    gain_min = np.inf

    def hook(t, state, adapt, **_):
        nonlocal drift, gain_sym, gain_min
        drift = max(drift, float(np.abs(state.r.T @ state.r - np.eye(3)).max()))
        gain_sym = max(gain_sym, float(np.abs(adapt.gain - adapt.gain.T).max()))
        gain_min = min(gain_min, float(np.linalg.eigvalsh(adapt.gain)[0]))

    run_scenario(cfg, on_step=hook)

    # (b) integrator order via step-halving against a fine reference
    truth = PlantTruth(theta_true=THETA, const=CONST, shape=SHAPE)
    sched = WindSchedule(steps=[], lag_tau=0.0)

    def integrate(dt):
        s = RigidBodyState.hover(0.0)
        s.v = np.array([3.0, -1.0, 0.5])
        s.omega = np.array([1.0, -2.0, 0.8])
        cmd = ActuatorCommand(u_x=0.5, u_z=0.6, tau=np.array([0.02, -0.01, 0.03]))
        t = 0.0
        for _ in range(int(round(1.0 / dt))):
            s = plant_step(s, cmd, sched, t, dt, truth)
            t += dt
        return np.concatenate([s.p, s.v, s.r.ravel(), s.omega])

    ref = integrate(1 / 1000)
    ratio = np.linalg.norm(integrate(1 / 125) - ref) \
        / np.linalg.norm(integrate(1 / 250) - ref)

    # (c) byte-identical reruns
    cfg2 = comparison_cfg("composite", 3)
    cfg2.duration = 3.0
    run_scenario(cfg2, out_dir=tmp_path / "a")
    run_scenario(cfg2, out_dir=tmp_path / "b")
    identical = (tmp_path / "a" / "telemetry.csv").read_bytes() \
        == (tmp_path / "b" / "telemetry.csv").read_bytes()

    ok = drift < 1e-8 and gain_sym < 1e-9 and gain_min > 0.0 \
        and 8.0 <= ratio <= 24.0 and identical
    report(9, ok, f"attitude drift {drift:.1e} (<1e-8) over 60 s; gain asym "
                  f"{gain_sym:.1e}, min eig {gain_min:.1e}; step-halving ratio "
                  f"{ratio:.1f} (16 +- 50%); byte-identical rerun: {identical}")
    assert drift < 1e-8
    assert gain_sym < 1e-9
    assert gain_min > 0.0
    assert 8.0 <= ratio <= 24.0
    assert identical
