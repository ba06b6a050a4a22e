"""Independent equilibrium certification.

Two checks that share no internals with the solvers:

* A unilateral deviator's optimal value. In the mean-field limit a single
  agent cannot move the population state, so against an equilibrium-playing
  population the deviator faces a time-indexed single-agent dynamic program
  along the induced population path. Its optimal value minus the equilibrium
  value is the deviation gap; a gap of zero (up to tolerance) certifies the
  equilibrium.

* An N-agent Monte Carlo simulation of the actual finite-population game,
  quantifying how closely the empirical population path tracks the
  deterministic mean-field prediction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import EquilibriumGenerator, SimplexGrid, interpolate_prescription
from .model import GameModel, kernel_tensor, max_abs_reward, reward_table
from .solve import _stationary_table, induce_trajectory
from .validation import check_mean_field, check_value_table


@dataclass(frozen=True)
class DeviatorProblem:
    """Setup for the deviation-gap computation.

    ``start`` is a single population state, or None to run from every grid
    point. For infinite-horizon models ``t_trunc`` bounds the dynamic program
    and contributes an explicit geometric tail term; finite-horizon models use
    the model's own horizon and must leave ``t_trunc`` unset.
    """

    theta: EquilibriumGenerator
    model: GameModel
    grid: SimplexGrid
    start: np.ndarray | None = None
    t_trunc: int | None = None
    terminal: np.ndarray | None = None

    def __post_init__(self):
        theta = _stationary_table(self.theta)
        object.__setattr__(self, "theta", theta)
        if self.model.is_finite:
            if self.t_trunc is not None:
                raise ValueError("t_trunc applies only to infinite-horizon models")
        else:
            if self.t_trunc is None or self.t_trunc < 1:
                raise ValueError("infinite-horizon verification needs t_trunc >= 1")
        if self.start is not None:
            object.__setattr__(
                self, "start", check_mean_field(self.start, self.model.n_types)
            )
        if self.terminal is not None:
            object.__setattr__(
                self, "terminal",
                check_value_table(self.terminal, self.grid.n_points,
                                  self.model.n_types),
            )


@dataclass(frozen=True)
class GapReport:
    """Per-start deviation gaps.

    ``deviator_values[i, x]`` is the optimal value of a lone deviator starting
    in type x at ``start_points[i]``; ``equilibrium_values`` the interpolated
    solver values; ``gaps`` their difference. ``truncation_bound`` is the
    geometric tail allowance for truncated infinite-horizon runs (zero for
    finite horizons).
    """

    start_points: np.ndarray
    deviator_values: np.ndarray
    equilibrium_values: np.ndarray
    gaps: np.ndarray
    max_gap: float
    truncation_bound: float


def truncation_bound(model: GameModel, grid: SimplexGrid, t_trunc: int) -> float:
    """Tail allowance delta^T * 2 * max|R| / (1 - delta) for truncated runs."""
    r_max = max_abs_reward(model, grid)
    return (model.discount ** t_trunc) * 2.0 * r_max / (1.0 - model.discount)


# grid-discretization slope of the certification tolerance, calibrated once on
# the built-in infection game (forced-follow error 2.2e-4 at resolution 50,
# kept with a safety factor) and frozen
GAP_TOL_SLOPE = 0.05


def gap_tolerance(model: GameModel, grid: SimplexGrid,
                  t_trunc: int | None = None) -> float:
    """Deviation-gap tolerance: base slack + truncation tail + O(1/M) term."""
    bound = 0.0 if t_trunc is None else truncation_bound(model, grid, t_trunc)
    return 1e-4 + bound + GAP_TOL_SLOPE / grid.resolution


def _deviator_dp(model, grid, theta, trajectory, horizon, terminal,
                 follow_theta):
    """Backward induction for one agent along a fixed population path.

    Independent of the solver: uses only the raw kernel/reward callables plus
    value interpolation for the optional terminal table.
    """
    n_types = model.n_types
    if terminal is not None:
        w = grid.interpolate_table(terminal, trajectory[horizon].reshape(1, -1))[0]
    else:
        w = np.zeros(n_types)
    for t in range(horizon, 0, -1):
        z_t = trajectory[t - 1]
        q = kernel_tensor(model, z_t)
        r = reward_table(model, z_t)
        action_values = r + model.discount * (q @ w)
        if follow_theta:
            gamma = interpolate_prescription(theta.table_for_stage(t), grid, z_t)
            w = (gamma * action_values).sum(axis=1)
        else:
            w = action_values.max(axis=1)
    return w


def deviator_value(problem: DeviatorProblem, values: np.ndarray,
                   follow_theta: bool = False,
                   trajectory_mode: str = "interpolate") -> GapReport:
    """Deviation gaps of a solved equilibrium.

    ``values`` is the solver's value table: (n_points, n_types) for stationary
    solutions, or the full (T+1, n_points, n_types) stack for finite horizons
    (only the first stage is compared). With ``follow_theta=True`` the agent
    is forced to randomize exactly as the population does, which reproduces
    the equilibrium value instead of the optimal one.
    """
    model, grid, theta = problem.model, problem.grid, problem.theta
    values = np.asarray(values, dtype=float)
    stage1_values = values if values.ndim == 2 else values[0]
    check_value_table(stage1_values, grid.n_points, model.n_types)

    if problem.start is None:
        starts = grid.points
    else:
        starts = problem.start.reshape(1, -1)

    if model.is_finite:
        horizon = model.horizon
        terminal = problem.terminal
        if terminal is None:
            terminal = np.zeros((grid.n_points, model.n_types))
        bound = 0.0
    else:
        horizon = problem.t_trunc
        terminal = None
        bound = truncation_bound(model, grid, horizon)

    n_starts = starts.shape[0]
    w_star = np.empty((n_starts, model.n_types))
    v_eq = np.empty((n_starts, model.n_types))
    for i in range(n_starts):
        trajectory = induce_trajectory(starts[i], theta, grid, model, horizon,
                                       mode=trajectory_mode,
                                       values=values if trajectory_mode == "resolve" else None)
        w_star[i] = _deviator_dp(model, grid, theta, trajectory, horizon,
                                 terminal, follow_theta)
        v_eq[i] = grid.interpolate_table(stage1_values,
                                         starts[i].reshape(1, -1))[0]

    gaps = w_star - v_eq
    return GapReport(start_points=starts.copy(), deviator_values=w_star,
                     equilibrium_values=v_eq, gaps=gaps,
                     max_gap=float(gaps.max()), truncation_bound=bound)


@dataclass(frozen=True)
class PopulationRun:
    """One seeded N-agent simulation.

    ``empirical`` and ``predicted`` are (t_sim + 1, n_types) trajectories; the
    predicted path is the deterministic mean-field forward iteration from the
    configured initial state. ``discounted_rewards`` holds each agent's
    realized discounted reward over the simulated window.
    """

    n_agents: int
    seed: int
    empirical: np.ndarray
    predicted: np.ndarray
    discounted_rewards: np.ndarray
    initial_types: np.ndarray

    @property
    def sup_l1_error(self) -> float:
        return float(np.abs(self.empirical - self.predicted).sum(axis=1).max())


def _initial_types(z1, n_agents, init, rng):
    n_types = z1.shape[0]
    if init == "iid":
        return rng.choice(n_types, size=n_agents, p=z1)
    if init == "rounded":
        # largest-remainder rounding of z1 * N
        raw = z1 * n_agents
        counts = np.floor(raw).astype(np.int64)
        short = n_agents - counts.sum()
        if short > 0:
            order = np.argsort(-(raw - counts), kind="stable")
            counts[order[:short]] += 1
        return np.repeat(np.arange(n_types), counts)
    raise ValueError(f"unknown init mode {init!r}")


def simulate_population(model: GameModel, theta, grid: SimplexGrid,
                        n_agents: int, z1, t_sim: int, seed: int,
                        init: str = "iid") -> PopulationRun:
    """Simulate the N-agent game under the equilibrium strategy.

    Every period each agent samples an action from the prescription evaluated
    at the *empirical* population state and its own type, then transitions
    through the kernel evaluated at that same empirical state; this is the
    literal finite-population game rather than the mean-field limit. Runs are
    reproducible for a fixed seed.
    """
    if n_agents < 1:
        raise ValueError(f"n_agents must be >= 1, got {n_agents}")
    if t_sim < 0:
        raise ValueError("t_sim must be nonnegative")
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    theta = _stationary_table(theta)
    if not theta.stationary and t_sim > theta.n_stages:
        raise ValueError(f"t_sim {t_sim} exceeds horizon {theta.n_stages}")
    z1 = check_mean_field(z1, model.n_types)

    rng = np.random.default_rng(seed)
    types = _initial_types(z1, n_agents, init, rng)
    n_types, n_actions = model.n_types, model.n_actions

    empirical = np.empty((t_sim + 1, n_types))
    rewards = np.zeros(n_agents)
    initial_types = types.copy()
    disc = 1.0

    for t in range(1, t_sim + 1):
        z_emp = np.bincount(types, minlength=n_types) / n_agents
        empirical[t - 1] = z_emp

        gamma = interpolate_prescription(theta.table_for_stage(t), grid, z_emp)
        action_cdf = np.cumsum(gamma, axis=1)
        u = rng.random(n_agents)
        actions = (action_cdf[types] < u[:, None]).sum(axis=1)
        np.clip(actions, 0, n_actions - 1, out=actions)

        r_table = reward_table(model, z_emp)
        rewards += disc * r_table[types, actions]
        disc *= model.discount

        q = kernel_tensor(model, z_emp)
        next_cdf = np.cumsum(q, axis=2)
        u2 = rng.random(n_agents)
        types = (next_cdf[types, actions] < u2[:, None]).sum(axis=1)
        np.clip(types, 0, n_types - 1, out=types)

    empirical[t_sim] = np.bincount(types, minlength=n_types) / n_agents
    predicted = induce_trajectory(z1, theta, grid, model, t_sim)

    return PopulationRun(n_agents=n_agents, seed=seed, empirical=empirical,
                         predicted=predicted, discounted_rewards=rewards,
                         initial_types=initial_types)
