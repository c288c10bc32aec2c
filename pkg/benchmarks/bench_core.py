"""Benchmark the compiled kernels against the pure-Python fallback.

Times the per-call hot operations and a full closed-loop scenario on each
available backend.  Run from the repository root:

    python benchmarks/bench_core.py [--loop]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np


def time_call(fn, *args, n=20000, repeat=3):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(n):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / n)
    return best


def bench_kernels():
    from vtolsim._core import available_backends

    backends = available_backends()
    rng = np.random.default_rng(0)
    phi = rng.normal(size=3)
    rd = backends["python"].rot_exp(rng.normal(size=3))
    r = backends["python"].rot_exp(rng.normal(size=3))
    vi = np.array([8.0, 0.5, 1.0])
    pars = np.array([1.225, 0.223, 1.7, 1.425, 3.126, 0.1524, 0.5, 0.0])
    theta = np.array([6.0, 25.0, 4.3, 0.155, 0.178, 1.6, 0.37, 3.25])
    inertia = np.diag([0.045, 0.025, 0.065])
    inertia_inv = np.linalg.inv(inertia)
    g = np.array([0.0, 0.0, 9.81])
    winds = np.tile([-4.0, 0.0, 0.0], (3, 1))
    p, v, w = np.zeros(3), np.array([1.0, 0, 0]), np.array([0.1, -0.2, 0.05])
    tau = np.array([0.01, 0.02, -0.01])
    dist = np.zeros(8)

    cases = {
        "rot_exp": lambda b: time_call(b.rot_exp, phi),
        "error_quat": lambda b: time_call(b.error_quat, rd, r),
        "regressor": lambda b: time_call(b.regressor, vi, 0.4, 0.6, pars),
        "plant_rk4_step": lambda b: time_call(
            b.plant_rk4_step, p, v, r, w, 0.4, 0.6, tau, theta, inertia,
            inertia_inv, g, winds, 0.004, pars, dist, n=5000),
    }

    names = list(backends)
    print(f"{'kernel':<16}" + "".join(f"{n + ' (us)':>16}" for n in names)
          + (f"{'speedup':>10}" if len(names) > 1 else ""))
    for case, runner in cases.items():
        row = {n: runner(backends[n]) * 1e6 for n in names}
        line = f"{case:<16}" + "".join(f"{row[n]:>16.2f}" for n in names)
        if "compiled" in row and "python" in row:
            line += f"{row['python'] / row['compiled']:>9.1f}x"
        print(line)


def bench_loop():
    """Wall time of one 20 s closed-loop scenario per backend (subprocesses,
    since the backend is chosen at import time)."""
    script = (
        "import time\n"
        "from vtolsim.config import ScenarioConfig\n"
        "from vtolsim.runner import run_scenario\n"
        "import vtolsim\n"
        "cfg = ScenarioConfig(scheme='composite', duration=20.0, seed=1,\n"
        "                     true_param_sigmas=2.0, noise=True)\n"
        "cfg.wind.profile = 'comparison'\n"
        "t0 = time.perf_counter()\n"
        "run_scenario(cfg)\n"
        "print(f'{vtolsim.BACKEND}: {time.perf_counter() - t0:.2f} s')\n"
    )
    for env_flag in ("0", "1"):
        env = dict(os.environ)
        if env_flag == "1":
            env["VTOLSIM_PURE_PYTHON"] = "1"
        else:
            env.pop("VTOLSIM_PURE_PYTHON", None)
        subprocess.run([sys.executable, "-c", script], env=env, check=True)


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--loop", action="store_true",
                    help="also time a full closed-loop run per backend")
    args = ap.parse_args()
    bench_kernels()
    if args.loop:
        print(flush=True)
        bench_loop()
