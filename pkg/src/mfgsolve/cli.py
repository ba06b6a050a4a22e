"""Command-line front end: solve, verify, simulate.

Configurations are JSON files with a model family, parameters, horizon and
grid resolution; outputs are CSV tables plus JSON reports carrying a
reproducibility manifest.
"""
from __future__ import annotations

import argparse
import os
import sys
import warnings

import numpy as np

from . import serialize
from .families import ConfigError, LoadedConfig, load_config
from .model import ModelError
from .solve import (FiniteSolution, SolveError, solve_finite, solve_infinite)
from .verify import DeviatorProblem, deviator_value, simulate_population


def _thread_count(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("MFGSOLVE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            warnings.warn(f"ignoring invalid MFGSOLVE_THREADS={env!r}")
    return 1


def check_monotone_profile(theta_table: np.ndarray, tol: float = 1e-9) -> bool:
    """Soft check for 2-type solutions: action-1 probabilities should be
    non-decreasing along the grid (ascending z0). Returns True when monotone;
    emits a warning otherwise."""
    if theta_table.shape[2] < 2:
        return True
    probs = theta_table[:, :, 1]
    drops = np.diff(probs, axis=0) < -tol
    if drops.any():
        warnings.warn(
            "equilibrium action-1 probabilities are not monotone in z0 "
            f"({int(drops.sum())} decreasing steps)"
        )
        return False
    return True


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    os.makedirs(args.out_dir, exist_ok=True)
    written = []

    def out(name):
        path = os.path.join(args.out_dir, name)
        written.append(path)
        return path

    n_threads = _thread_count(args)
    try:
        if cfg.model.is_finite:
            solution = solve_finite(cfg.model, cfg.grid, cfg.fp_options,
                                    strict=args.strict, n_threads=n_threads)
        else:
            solution = solve_infinite(cfg.model, cfg.grid, cfg.fp_options,
                                      sup_tol=cfg.sup_tol,
                                      max_sweeps=cfg.max_sweeps,
                                      strict=args.strict, n_threads=n_threads)
    except (SolveError, ModelError) as exc:
        for path in written:
            if os.path.exists(path):
                os.unlink(path)
        print(f"solve failed: {exc}", file=sys.stderr)
        return 1

    is_finite = isinstance(solution, FiniteSolution)
    stage1_table = solution.theta.tables[0]
    stage1_values = solution.values[0] if is_finite else solution.value

    try:
        serialize.write_theta_csv(out("theta.csv"), solution.theta, cfg.grid)
        serialize.write_value_csv(out("value.csv"), solution.values if is_finite
                                  else solution.value, cfg.grid,
                                  stationary=not is_finite)
        monotone = None
        if cfg.model.n_types == 2:
            serialize.write_plotdata_csv(out("plotdata.csv"), stage1_table,
                                         stage1_values, cfg.grid)
            monotone = check_monotone_profile(stage1_table)
            if not monotone:
                print("warning: action-1 probabilities not monotone in z0",
                      file=sys.stderr)

        manifest = serialize.RunManifest.create(
            cfg.raw, cfg.seed,
            options={"strict": args.strict, "threads": n_threads})
        report = {
            "manifest": manifest.to_dict(),
            "horizon": cfg.model.horizon if cfg.model.is_finite else "infinite",
            "grid_resolution": cfg.grid.resolution,
            "diagnostics": serialize.diagnostics_summary(solution.diagnostics),
        }
        if not is_finite:
            report["sweeps"] = solution.sweeps
            report["final_sup_change"] = solution.final_sup_change
        if monotone is not None:
            report["monotone_in_z0"] = monotone
        serialize.write_report_json(out("report.json"), report)
    except Exception:
        for path in written:
            if os.path.exists(path):
                os.unlink(path)
        raise

    print(f"solved: outputs in {args.out_dir}")
    return 0


def _load_solution(cfg: LoadedConfig, solution_dir):
    theta_path = os.path.join(solution_dir, "theta.csv")
    value_path = os.path.join(solution_dir, "value.csv")
    for path in (theta_path, value_path):
        if not os.path.exists(path):
            raise FileNotFoundError(f"missing solution file {path}")
    theta = serialize.read_theta_csv(theta_path, cfg.grid, cfg.model.n_types,
                                     cfg.model.n_actions)
    values = serialize.read_value_csv(value_path, cfg.grid, cfg.model.n_types)
    return theta, values


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    try:
        theta, values = _load_solution(cfg, args.solution_dir)
    except (FileNotFoundError, ValueError) as exc:
        print(f"cannot load solution: {exc}", file=sys.stderr)
        return 1

    gap_tol = args.gap_tol if args.gap_tol is not None else cfg.gap_tol
    t_trunc = None if cfg.model.is_finite else cfg.t_trunc
    problem = DeviatorProblem(theta=theta, model=cfg.model, grid=cfg.grid,
                              start=None, t_trunc=t_trunc)
    report = deviator_value(problem, values)

    manifest = serialize.RunManifest.create(
        cfg.raw, cfg.seed, options={"gap_tol": gap_tol, "t_trunc": t_trunc})
    payload = {
        "manifest": manifest.to_dict(),
        "max_gap": report.max_gap,
        "truncation_bound": report.truncation_bound,
        "gap_tol": gap_tol,
        "passed": bool(report.max_gap <= gap_tol),
        "gaps": [
            {
                "start": [float(v) for v in report.start_points[i]],
                "per_type_gap": [float(v) for v in report.gaps[i]],
            }
            for i in range(report.start_points.shape[0])
        ],
    }
    out_path = os.path.join(args.solution_dir, "verify_report.json")
    serialize.write_report_json(out_path, payload)
    print(f"max_gap={report.max_gap:.6e} "
          f"(tolerance {gap_tol:.6e}, truncation bound "
          f"{report.truncation_bound:.3e}) -> "
          f"{'PASS' if payload['passed'] else 'FAIL'}")
    return 0 if payload["passed"] else 1


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    try:
        theta, _values = _load_solution(cfg, args.solution_dir)
    except (FileNotFoundError, ValueError) as exc:
        print(f"cannot load solution: {exc}", file=sys.stderr)
        return 1

    os.makedirs(args.out_dir, exist_ok=True)
    z1 = (np.asarray(args.z1, dtype=float) if args.z1
          else np.full(cfg.model.n_types, 1.0 / cfg.model.n_types))
    run = simulate_population(cfg.model, theta, cfg.grid,
                              n_agents=args.n_agents, z1=z1,
                              t_sim=args.steps, seed=args.seed)

    serialize.write_trajectory_csv(os.path.join(args.out_dir, "trajectory.csv"),
                                   run.empirical, run.predicted)
    manifest = serialize.RunManifest.create(
        cfg.raw, args.seed,
        options={"n_agents": args.n_agents, "steps": args.steps,
                 "z1": [float(v) for v in z1]})
    summary = {
        "manifest": manifest.to_dict(),
        "n_agents": run.n_agents,
        "seed": run.seed,
        "sup_l1_error": run.sup_l1_error,
        "mean_discounted_reward": float(run.discounted_rewards.mean()),
    }
    serialize.write_report_json(os.path.join(args.out_dir, "summary.json"),
                                summary)
    print(f"simulated N={run.n_agents}: sup-L1 error {run.sup_l1_error:.6f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mfgsolve",
        description="Equilibrium solver for discrete-time mean-field games",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="JSON model configuration")
        p.add_argument("--strict", action="store_true",
                       help="fail on any non-converged grid point")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (default 1; env MFGSOLVE_THREADS)")

    p_solve = sub.add_parser("solve", help="compute the equilibrium")
    common(p_solve)
    p_solve.add_argument("-o", "--out-dir", required=True)
    p_solve.set_defaults(func=cmd_solve)

    p_verify = sub.add_parser("verify",
                              help="certify a solution via the deviation gap")
    common(p_verify)
    p_verify.add_argument("-s", "--solution-dir", required=True)
    p_verify.add_argument("--gap-tol", type=float, default=None)
    p_verify.set_defaults(func=cmd_verify)

    p_sim = sub.add_parser("simulate", help="run the N-agent simulation")
    common(p_sim)
    p_sim.add_argument("-s", "--solution-dir", required=True)
    p_sim.add_argument("-N", "--n-agents", type=int, required=True)
    p_sim.add_argument("--seed", type=int, required=True)
    p_sim.add_argument("--steps", type=int, default=100)
    p_sim.add_argument("--z1", type=float, nargs="+", default=None,
                       help="initial population state (default uniform)")
    p_sim.add_argument("-o", "--out-dir", required=True)
    p_sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
