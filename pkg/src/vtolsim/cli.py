"""Command-line entry point.

Verbs: run a single scenario, run the multi-seed convergence study, compare
the five control schemes, or fit force-model coefficients from a dataset.
Exit codes: 0 success, 2 diverged simulation, 3 invalid configuration.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ScenarioConfig, THETA_LABELS, load_scenario
from .plant import SimulationDiverged

EXIT_OK = 0
EXIT_DIVERGED = 2
EXIT_BAD_CONFIG = 3


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None, help="JSON config file")
    p.add_argument("--seed", type=int, default=None, help="override RNG seed")
    p.add_argument("--out", type=Path, default=None, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vtolsim")
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="run one scenario")
    _add_common(p_run)
    p_run.add_argument("--scheme", default=None,
                       help="composite | frozen-gain | tracking | pid | pd")

    p_study = sub.add_parser("study", help="parameter-convergence study")
    _add_common(p_study)
    p_study.add_argument("--runs", type=int, default=7)

    p_cmp = sub.add_parser("compare", help="compare all five schemes")
    _add_common(p_cmp)

    p_sid = sub.add_parser("sysid", help="fit coefficients from a dataset")
    p_sid.add_argument("--dataset", type=Path, required=True)
    p_sid.add_argument("--out", type=Path, default=None)
    p_sid.add_argument("--generate", action="store_true",
                       help="synthesize the dataset file first")
    p_sid.add_argument("--noise", type=float, default=0.05,
                       help="force noise in N when generating")
    p_sid.add_argument("--seed", type=int, default=0)
    return parser


def _load(args) -> ScenarioConfig:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if getattr(args, "scheme", None):
        overrides["scheme"] = args.scheme
    return load_scenario(args.config, overrides)


def cmd_run(args) -> int:
    from .runner import run_scenario
    cfg = _load(args)
    try:
        res = run_scenario(cfg, out_dir=args.out)
    except SimulationDiverged as exc:
        print(f"error: simulation diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    print(json.dumps(res.summary, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_study(args) -> int:
    from .runner import convergence_study
    cfg = _load(args)
    cfg.theta_init = "random"
    try:
        out = convergence_study(cfg, n_runs=args.runs, out_dir=args.out)
    except SimulationDiverged as exc:
        print(f"error: simulation diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    std0, std1 = out["std"][0], out["std"][-1]
    print(f"{args.runs} runs, {out['t'][-1]:.1f} s each")
    for i, name in enumerate(THETA_LABELS):
        print(f"  {name:<6} std {std0[i]:.4g} -> {std1[i]:.4g}")
    return EXIT_OK


def cmd_compare(args) -> int:
    from .runner import compare_controllers
    cfg = _load(args)
    try:
        rows = compare_controllers(cfg, out_dir=args.out)
    except SimulationDiverged as exc:
        print(f"error: simulation diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    print(f"{'scheme':<12} {'rms_verr':>10} {'max_verr':>10} {'post_off_max':>13}")
    for scheme, s in rows.items():
        print(f"{scheme:<12} {s['rms_verr']:>10.4f} {s['max_verr']:>10.4f} "
              f"{s.get('post_off_max_verr', float('nan')):>13.4f}")
    return EXIT_OK


def cmd_sysid(args) -> int:
    from .config import theta_nominal
    from .forcemodel import AeroConstants, SideForceShape
    from .sysid import (TunnelDataset, fit_aero_linear, fit_sideforce,
                        fit_thrust, synth_tunnel_data)

    if args.generate:
        rng = np.random.default_rng(args.seed)
        const, shape = AeroConstants(), SideForceShape()
        theta = theta_nominal()
        wing = synth_tunnel_data(theta, const, shape, v_grid=[3.0, 6.0, 9.0],
                                 alpha_grid=np.deg2rad(np.arange(-45, 46, 5)),
                                 u_grid=[0.0], sigma_noise=args.noise, rng=rng)
        rotor = synth_tunnel_data(theta, const, shape, v_grid=[0.0, 3.0, 6.0, 9.0],
                                  alpha_grid=np.deg2rad(np.arange(-45, 46, 15)),
                                  u_grid=[0.4, 0.6, 0.8], sigma_noise=args.noise,
                                  rng=rng)
        wing.extend(rotor).to_csv(args.dataset)
        print(f"wrote {args.dataset}", file=sys.stderr)

    if not args.dataset.exists():
        print(f"error: dataset {args.dataset} not found", file=sys.stderr)
        return EXIT_BAD_CONFIG
    ds = TunnelDataset.from_csv(args.dataset)
    report = {}
    aero = fit_aero_linear(ds)
    report["aero"] = aero.as_dict()
    side = fit_sideforce(ds)
    report["sideforce"] = {"C_S": side.c_s, "C_S_std": side.c_s_std,
                           "k1": side.k1, "k2": side.k2}
    try:
        thrust = fit_thrust(ds)
        report["thrust"] = thrust.as_dict()
    except ValueError:
        pass
    print(json.dumps(report, indent=2, sort_keys=True))
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "sysid.json").write_text(
            json.dumps(report, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        handler = {"run": cmd_run, "study": cmd_study, "compare": cmd_compare,
                   "sysid": cmd_sysid}[args.verb]
        return handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
