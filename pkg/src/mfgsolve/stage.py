"""Per-population-state prescription fixed points.

At a population state z with a given continuation value, an equilibrium
prescription must be a best response to the continuation evaluated at the
very next population state that the prescription itself induces. This module
solves that self-referential stage problem: damped best-response iteration
first, then exhaustive search over pure prescriptions, then a scan of
single-type mixtures along indifference frontiers with root refinement.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .dynamics import propagate_tensor
from .grid import SimplexGrid
from .model import GameModel, kernel_tensor, reward_table
from .validation import check_mean_field, check_prescription, check_value_table


class TieBreak(enum.Enum):
    """How to place mass when several actions are within the indifference
    tolerance of the maximum."""

    LOWEST_ACTION = "lowest"
    UNIFORM_MIX = "uniform"


class Method(enum.Enum):
    ITERATION = "iteration"
    EXHAUSTIVE_PURE = "exhaustive-pure"
    EXHAUSTIVE_MIXED = "exhaustive-mixed"


@dataclass(frozen=True)
class FixedPointOptions:
    """Tuning knobs for the stage fixed-point search.

    ``damping`` is the step size of the best-response iteration; ``tol`` the
    acceptable residual (best-response value minus achieved value, maximized
    over types). ``fallback`` enables the exhaustive pure / mixed phases when
    iteration stalls. ``init_gamma`` seeds the iteration (uniform when None).
    """

    damping: float = 0.5
    max_iters: int = 100
    tol: float = 1e-9
    tie_break: TieBreak = TieBreak.LOWEST_ACTION
    fallback: bool = True
    init_gamma: np.ndarray | None = None
    indifference_tol: float = 1e-9
    mix_grid: int = 1000

    def __post_init__(self):
        if not 0.0 < self.damping <= 1.0:
            raise ValueError(f"damping must be in (0, 1], got {self.damping}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if self.mix_grid < 2:
            raise ValueError("mix_grid must be at least 2")


@dataclass(frozen=True)
class StageProblem:
    """One stage problem: state z, continuation value table, model, grid."""

    z: np.ndarray
    continuation: np.ndarray
    model: GameModel
    grid: SimplexGrid

    def __post_init__(self):
        z = check_mean_field(self.z, self.model.n_types)
        cont = check_value_table(self.continuation, self.grid.n_points,
                                 self.model.n_types)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "continuation", cont)


@dataclass(frozen=True)
class FixedPointResult:
    """Outcome of a stage solve.

    ``residual`` is recomputed at the self-induced next state of ``gamma``;
    ``values`` holds the achieved per-type values there (the Bellman update).
    """

    gamma: np.ndarray
    residual: float
    iterations: int
    method: Method
    converged: bool
    values: np.ndarray = field(repr=False, default=None)


class _Stage:
    """Cached per-state quantities: kernel tensor and reward table at z."""

    def __init__(self, z, continuation, model, grid):
        self.z = np.asarray(z, dtype=float)
        self.continuation = np.asarray(continuation, dtype=float)
        self.grid = grid
        self.q = kernel_tensor(model, self.z)
        self.r = reward_table(model, self.z)
        self.discount = model.discount

    def propagate(self, gamma):
        return propagate_tensor(self.z, gamma, self.q)

    def table(self, z_next):
        cont = self.grid.interpolate_table(self.continuation, z_next.reshape(1, -1))[0]
        return self.r + self.discount * (self.q @ cont)

    def table_batch(self, z_next_batch):
        cont = self.grid.interpolate_table(self.continuation, z_next_batch)
        return self.r[None] + self.discount * np.einsum("xay,my->mxa", self.q, cont)

    def residual(self, gamma):
        """Residual of gamma at its own induced next state.

        Returns (residual, stage table, achieved per-type values).
        """
        table = self.table(self.propagate(gamma))
        achieved = (gamma * table).sum(axis=1)
        res = float((table.max(axis=1) - achieved).max())
        return res, table, achieved


def _prescription_from_table(table, tie_break, indifference_tol):
    """Best-response prescription and per-type maximizer sets for a stage table."""
    n_types, n_actions = table.shape
    gamma = np.zeros((n_types, n_actions))
    maximizers = []
    for x in range(n_types):
        row = table[x]
        winners = np.flatnonzero(row >= row.max() - indifference_tol)
        maximizers.append(winners)
        if tie_break is TieBreak.UNIFORM_MIX:
            gamma[x, winners] = 1.0 / winners.size
        else:
            gamma[x, winners[0]] = 1.0
    return gamma, maximizers


def stage_value(x, a, z, z_next, continuation, model, grid) -> float:
    """Value of playing action a in type x at z, against a continuation table
    evaluated at the (externally supplied) next population state."""
    z = check_mean_field(z, model.n_types)
    z_next = check_mean_field(z_next, model.n_types)
    cont = check_value_table(continuation, grid.n_points, model.n_types)
    row = np.asarray(model.kernel(x, a, z), dtype=float)
    next_vals = grid.interpolate_table(cont, z_next.reshape(1, -1))[0]
    return float(model.reward(x, a, z)) + model.discount * float(row @ next_vals)


def best_response(z, z_next, continuation, model, grid,
                  tie_break: TieBreak = TieBreak.LOWEST_ACTION,
                  indifference_tol: float = 1e-9):
    """Per-type argmax of the stage values at (z, z_next).

    Returns a prescription placing mass according to the tie-break rule, plus
    the per-type maximizer index arrays. Any distribution supported on the
    maximizer set attains the maximum, which is why the optimization over
    action distributions reduces to a per-action comparison.
    """
    st = _Stage(z, continuation, model, grid)
    table = st.table(check_mean_field(z_next, model.n_types))
    return _prescription_from_table(table, tie_break, indifference_tol)


def solve_stage_fixed_point(problem: StageProblem,
                            opts: FixedPointOptions | None = None) -> FixedPointResult:
    """Find a prescription that is a best response to the next state it induces.

    Phases: (1) damped best-response iteration from ``init_gamma`` (uniform by
    default), accepting either the damped iterate or the undamped best
    response as soon as its residual meets ``tol``; (2) enumeration of all
    pure prescriptions; (3) for small games, a scan of single-type two-action
    mixtures along each indifference frontier, refined by root finding on the
    action-value gap. If everything fails, the best-residual prescription is
    returned with ``converged=False``.
    """
    if opts is None:
        opts = FixedPointOptions()
    st = _Stage(problem.z, problem.continuation, problem.model, problem.grid)
    n_types, n_actions = st.r.shape

    if opts.init_gamma is not None:
        gamma = check_prescription(opts.init_gamma, n_types, n_actions).copy()
    else:
        gamma = np.full((n_types, n_actions), 1.0 / n_actions)

    best = None  # (residual, gamma, achieved, method, iterations)

    def consider(res, gam, achieved, method, iters):
        nonlocal best
        if best is None or res < best[0]:
            best = (res, gam.copy(), achieved.copy(), method, iters)

    def done(res, gam, achieved, method, iters):
        return FixedPointResult(gamma=gam.copy(), residual=res, iterations=iters,
                                method=method, converged=True, values=achieved.copy())

    res, table, achieved = st.residual(gamma)
    if res <= opts.tol:
        return done(res, gamma, achieved, Method.ITERATION, 0)
    consider(res, gamma, achieved, Method.ITERATION, 0)

    stall_history = [res]
    for k in range(1, opts.max_iters + 1):
        br, _ = _prescription_from_table(table, opts.tie_break, opts.indifference_tol)
        res_br, _, ach_br = st.residual(br)
        if res_br <= opts.tol:
            return done(res_br, br, ach_br, Method.ITERATION, k)
        consider(res_br, br, ach_br, Method.ITERATION, k)

        gamma = (1.0 - opts.damping) * gamma + opts.damping * br
        res, table, achieved = st.residual(gamma)
        if res <= opts.tol:
            return done(res, gamma, achieved, Method.ITERATION, k)
        consider(res, gamma, achieved, Method.ITERATION, k)

        stall_history.append(best[0])
        if k >= 15 and best[0] > 0.9 * stall_history[-15]:
            break  # oscillating around a mixed point; hand off to the fallbacks

    iters_used = len(stall_history) - 1
    if not opts.fallback:
        res, gam, ach, method, _ = best
        return FixedPointResult(gamma=gam, residual=res, iterations=iters_used,
                                method=method, converged=False, values=ach)

    # phase 2: all pure prescriptions, lexicographic by action assignment
    eye = np.eye(n_actions)
    for assignment in itertools.product(range(n_actions), repeat=n_types):
        gam = eye[list(assignment)]
        res, _, ach = st.residual(gam)
        if res <= opts.tol:
            return done(res, gam, ach, Method.EXHAUSTIVE_PURE, iters_used)
        consider(res, gam, ach, Method.EXHAUSTIVE_PURE, iters_used)

    # phase 3: single-type mixtures on indifference frontiers
    if n_types * n_actions <= 8:
        outcome = _frontier_search(st, opts, consider, iters_used)
        if outcome is not None:
            return outcome

    res, gam, ach, method, _ = best
    return FixedPointResult(gamma=gam, residual=res, iterations=iters_used,
                            method=method, converged=False, values=ach)


def _mixture_candidates(n_types, n_actions, init_gamma):
    """Frontier candidates (mixing type, action pair, pure assignment for the
    other types), with a hint derived from a seeded nearly-mixed row first."""
    seen = set()
    if init_gamma is not None:
        mixed_rows = [x for x in range(n_types)
                      if np.sort(init_gamma[x])[-2] > 1e-9]
        if len(mixed_rows) == 1:
            x0 = mixed_rows[0]
            top2 = np.argsort(-init_gamma[x0], kind="stable")[:2]
            a1, a2 = int(min(top2)), int(max(top2))
            others = tuple(int(np.argmax(init_gamma[x]))
                           for x in range(n_types) if x != x0)
            cand = (x0, a1, a2, others)
            seen.add(cand)
            yield cand
    for x0 in range(n_types):
        for a1, a2 in itertools.combinations(range(n_actions), 2):
            for others in itertools.product(range(n_actions), repeat=n_types - 1):
                cand = (x0, a1, a2, others)
                if cand not in seen:
                    yield cand


def _frontier_search(st, opts, consider, iters_used):
    n_types, n_actions = st.r.shape
    if n_actions < 2:
        return None
    eye = np.eye(n_actions)
    weights = np.linspace(0.0, 1.0, opts.mix_grid + 1)

    for x0, a1, a2, others in _mixture_candidates(n_types, n_actions,
                                                  opts.init_gamma):
        other_types = [x for x in range(n_types) if x != x0]

        def gamma_at(w):
            gam = np.zeros((n_types, n_actions))
            for x, a in zip(other_types, others):
                gam[x] = eye[a]
            gam[x0, a1] = w
            gam[x0, a2] = 1.0 - w
            return gam

        z_lo = st.propagate(gamma_at(0.0))
        z_hi = st.propagate(gamma_at(1.0))
        z_batch = (1.0 - weights)[:, None] * z_lo + weights[:, None] * z_hi
        tables = st.table_batch(z_batch)

        achieved = np.empty((weights.size, n_types))
        for x, a in zip(other_types, others):
            achieved[:, x] = tables[:, x, a]
        achieved[:, x0] = (weights * tables[:, x0, a1]
                           + (1.0 - weights) * tables[:, x0, a2])
        residuals = (tables.max(axis=2) - achieved).max(axis=1)

        hit = np.flatnonzero(residuals <= opts.tol)
        if hit.size:
            gam = gamma_at(weights[hit[0]])
            res, _, ach = st.residual(gam)
            if res <= opts.tol:
                return FixedPointResult(gamma=gam, residual=res,
                                        iterations=iters_used,
                                        method=Method.EXHAUSTIVE_MIXED,
                                        converged=True, values=ach)
            consider(res, gam, ach, Method.EXHAUSTIVE_MIXED, iters_used)

        i_best = int(np.argmin(residuals))
        gam = gamma_at(weights[i_best])
        res_b, _, ach_b = st.residual(gam)
        consider(res_b, gam, ach_b, Method.EXHAUSTIVE_MIXED, iters_used)

        # refine where the action-value gap of the mixing type changes sign
        gap = tables[:, x0, a1] - tables[:, x0, a2]

        def gap_at(w):
            z_next = (1.0 - w) * z_lo + w * z_hi
            table = st.table(z_next)
            return table[x0, a1] - table[x0, a2]

        sign_change = np.flatnonzero(gap[:-1] * gap[1:] < 0.0)
        for i in sign_change:
            w_root = brentq(gap_at, weights[i], weights[i + 1], xtol=1e-15)
            gam = gamma_at(w_root)
            res, _, ach = st.residual(gam)
            if res <= opts.tol:
                return FixedPointResult(gamma=gam, residual=res,
                                        iterations=iters_used,
                                        method=Method.EXHAUSTIVE_MIXED,
                                        converged=True, values=ach)
            consider(res, gam, ach, Method.EXHAUSTIVE_MIXED, iters_used)
    return None
