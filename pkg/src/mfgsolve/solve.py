"""Top-level equilibrium solvers.

Finite horizon: backward recursion. Starting from the terminal value, each
stage solves one prescription fixed point per grid point and rolls the value
function back through the induced next state.

Infinite horizon: value iteration with an embedded equilibrium solve. Each
sweep recomputes the stage fixed point at every grid point against the
current value table and applies the Bellman update; the stationary
prescription table of the final sweep, together with the converged values,
solves the coupled fixed-point system up to the reported sup-norm change.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import propagate
from .grid import EquilibriumGenerator, SimplexGrid, interpolate_prescription
from .model import GameModel
from .stage import FixedPointOptions, Method, StageProblem, \
    solve_stage_fixed_point
from .validation import check_mean_field, check_value_table


class SolveError(RuntimeError):
    """A solve failed in strict mode or could not produce a usable solution."""


class NoConvergenceError(SolveError):
    """Outer iteration exhausted its sweep budget."""

    def __init__(self, message, last_sup_change=None, best_residual=None):
        super().__init__(message)
        self.last_sup_change = last_sup_change
        self.best_residual = best_residual


@dataclass(frozen=True)
class PointDiagnostic:
    """Summary of one stage fixed-point solve."""

    residual: float
    iterations: int
    method: Method
    converged: bool


@dataclass(frozen=True)
class FiniteSolution:
    """Backward-recursion output: per-stage prescriptions and values.

    ``values`` has shape (T+1, n_points, n_types); the final slice is the
    terminal reward table. ``diagnostics[t][p]`` summarizes the stage solve at
    1-based stage t+1 and grid point p.
    """

    theta: EquilibriumGenerator
    values: np.ndarray
    diagnostics: list

    @property
    def horizon(self) -> int:
        return self.values.shape[0] - 1


@dataclass(frozen=True)
class InfiniteSolution:
    """Stationary equilibrium: prescription table, values, convergence info."""

    theta: EquilibriumGenerator
    value: np.ndarray
    sweeps: int
    final_sup_change: float
    diagnostics: list
    history: list | None = None


def _solve_points(grid, continuation, model, opts, warm, n_threads):
    """One backward stage / one sweep: a stage solve per grid point."""

    def solve_one(p):
        point_opts = opts
        if warm is not None:
            point_opts = replace(opts, init_gamma=warm[p])
        problem = StageProblem(z=grid.points[p], continuation=continuation,
                               model=model, grid=grid)
        return solve_stage_fixed_point(problem, point_opts)

    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(solve_one, range(grid.n_points)))
    else:
        results = [solve_one(p) for p in range(grid.n_points)]
    return results


def _collect(results, grid, model):
    gammas = np.empty((grid.n_points, model.n_types, model.n_actions))
    values = np.empty((grid.n_points, model.n_types))
    diags = []
    for p, res in enumerate(results):
        gammas[p] = res.gamma
        values[p] = res.values
        diags.append(PointDiagnostic(residual=res.residual,
                                     iterations=res.iterations,
                                     method=res.method,
                                     converged=res.converged))
    return gammas, values, diags


def _check_strict(diags, label):
    bad = [p for p, d in enumerate(diags) if not d.converged]
    if bad:
        raise SolveError(
            f"stage fixed point did not converge at {label}, grid points {bad}"
        )


def solve_finite(model: GameModel, grid: SimplexGrid,
                 opts: FixedPointOptions | None = None,
                 terminal: np.ndarray | None = None,
                 strict: bool = False, n_threads: int = 1) -> FiniteSolution:
    """Backward recursion over a finite horizon.

    ``terminal`` is an optional (n_points, n_types) terminal reward table;
    zero by default. Deterministic for fixed options: stages descend, grid
    points are visited in lexicographic order, ties break by lowest index.
    """
    if not model.is_finite:
        raise ValueError("solve_finite requires a finite-horizon model")
    if opts is None:
        opts = FixedPointOptions()
    horizon = model.horizon
    if terminal is None:
        terminal = np.zeros((grid.n_points, model.n_types))
    terminal = check_value_table(terminal, grid.n_points, model.n_types)

    values = np.empty((horizon + 1, grid.n_points, model.n_types))
    values[horizon] = terminal
    tables = np.empty((horizon, grid.n_points, model.n_types, model.n_actions))
    diagnostics: list = [None] * horizon

    warm = None
    for t in range(horizon, 0, -1):
        results = _solve_points(grid, values[t], model, opts, warm, n_threads)
        gammas, stage_values, diags = _collect(results, grid, model)
        tables[t - 1] = gammas
        values[t - 1] = stage_values
        diagnostics[t - 1] = diags
        if strict:
            _check_strict(diags, f"stage {t}")
        warm = gammas

    theta = EquilibriumGenerator(tables=tables, stationary=False)
    values.setflags(write=False)
    return FiniteSolution(theta=theta, values=values, diagnostics=diagnostics)


def solve_infinite(model: GameModel, grid: SimplexGrid,
                   opts: FixedPointOptions | None = None,
                   sup_tol: float = 1e-8, max_sweeps: int = 500,
                   strict: bool = False, n_threads: int = 1,
                   warm_start: bool = True,
                   keep_history: bool = False) -> InfiniteSolution:
    """Value iteration with embedded per-point equilibrium solves.

    Starts from the zero table; stops when the sup-norm change of a full sweep
    is at most ``sup_tol``. Raises :class:`NoConvergenceError` when the sweep
    budget runs out.
    """
    if model.is_finite:
        raise ValueError("solve_infinite requires an infinite-horizon model")
    if opts is None:
        opts = FixedPointOptions()

    value = np.zeros((grid.n_points, model.n_types))
    warm = None
    history = [] if keep_history else None
    change = np.inf
    for sweep in range(1, max_sweeps + 1):
        results = _solve_points(grid, value, model, opts, warm, n_threads)
        gammas, new_value, diags = _collect(results, grid, model)
        if strict:
            _check_strict(diags, f"sweep {sweep}")
        change = float(np.abs(new_value - value).max())
        value = new_value
        if keep_history:
            history.append(value.copy())
        if warm_start:
            warm = gammas
        if change <= sup_tol:
            theta = EquilibriumGenerator(tables=gammas[None], stationary=True)
            value.setflags(write=False)
            return InfiniteSolution(theta=theta, value=value, sweeps=sweep,
                                    final_sup_change=change, diagnostics=diags,
                                    history=history)
    raise NoConvergenceError(
        f"value iteration did not reach sup_tol={sup_tol} within "
        f"{max_sweeps} sweeps (last change {change})",
        last_sup_change=change,
    )


def _stationary_table(theta):
    """Accept an EquilibriumGenerator or a bare (P, X, A) stage table."""
    if isinstance(theta, EquilibriumGenerator):
        return theta
    table = np.asarray(theta, dtype=float)
    if table.ndim != 3:
        raise ValueError("theta must be an EquilibriumGenerator or a 3-d table")
    return EquilibriumGenerator(tables=table[None], stationary=True)


def induce_trajectory(z1, theta, grid: SimplexGrid, model: GameModel,
                      n_steps: int, mode: str = "interpolate",
                      values: np.ndarray | None = None,
                      opts: FixedPointOptions | None = None) -> np.ndarray:
    """Deterministic population path under the equilibrium prescriptions.

    Returns an (n_steps + 1, n_types) array starting at z1. Off-grid states
    use the interpolated prescription by default; ``mode="resolve"`` re-solves
    the stage fixed point at each visited state against ``values`` instead.
    """
    theta = _stationary_table(theta)
    if n_steps < 0:
        raise ValueError("n_steps must be nonnegative")
    if not theta.stationary and n_steps > theta.n_stages:
        raise ValueError(
            f"trajectory of {n_steps} steps exceeds horizon {theta.n_stages}"
        )
    if mode not in ("interpolate", "resolve"):
        raise ValueError(f"unknown trajectory mode {mode!r}")
    if mode == "resolve" and values is None:
        raise ValueError("resolve mode needs the value table(s)")

    z = check_mean_field(z1, model.n_types)
    out = np.empty((n_steps + 1, model.n_types))
    out[0] = z
    for step in range(1, n_steps + 1):
        stage_table = theta.table_for_stage(step)
        if mode == "interpolate":
            gamma = interpolate_prescription(stage_table, grid, z)
        else:
            continuation = values if values.ndim == 2 else values[step]
            problem = StageProblem(z=z, continuation=continuation,
                                   model=model, grid=grid)
            gamma = solve_stage_fixed_point(problem, opts).gamma
        z = propagate(z, gamma, model)
        out[step] = z
    return out


class StrategyEvaluator:
    """Equilibrium strategy as a function of (time, population state, type).

    A thin wrapper over prescription interpolation: the action distribution
    depends on history only through the current stage and state, so the
    strategy is Markov by construction.
    """

    def __init__(self, theta, grid: SimplexGrid):
        self.theta = _stationary_table(theta)
        self.grid = grid

    def __call__(self, z, x: int | None = None, t: int = 1):
        gamma = interpolate_prescription(self.theta.table_for_stage(t),
                                         self.grid, z)
        if x is None:
            return gamma
        return gamma[x]


def assemble_strategy(theta, grid: SimplexGrid) -> StrategyEvaluator:
    """Wrap an equilibrium generating function as a strategy evaluator."""
    return StrategyEvaluator(theta, grid)
