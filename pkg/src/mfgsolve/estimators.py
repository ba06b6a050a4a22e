"""Estimator-style front ends for the equilibrium solvers.

Both classes follow the sklearn lifecycle: hyperparameters in ``__init__``
(introspectable through ``get_params``/``set_params``), a ``fit`` that runs
the solver and stores trailing-underscore attributes, and prediction methods
that evaluate the fitted equilibrium strategy at arbitrary population states.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .grid import SimplexGrid, interpolate
from .model import GameModel
from .stage import FixedPointOptions, TieBreak
from .solve import assemble_strategy, induce_trajectory, solve_finite, \
    solve_infinite


class _SolverMixin:
    def _fp_options(self) -> FixedPointOptions:
        return FixedPointOptions(
            damping=self.damping,
            max_iters=self.max_iters,
            tol=self.tol,
            tie_break=TieBreak(self.tie_break),
            fallback=self.fallback,
        )

    def predict_proba(self, z, x: int | None = None, stage: int = 1):
        """Equilibrium action distribution at population state z.

        Returns the row for type ``x``, or the full (n_types, n_actions)
        prescription when ``x`` is None.
        """
        check_is_fitted(self, "theta_")
        return self.strategy_(z, x=x, t=stage)

    def predict(self, z, x: int, stage: int = 1) -> int:
        """Modal equilibrium action for one type at population state z."""
        return int(np.argmax(self.predict_proba(z, x=x, stage=stage)))

    def trajectory(self, z1, n_steps: int) -> np.ndarray:
        """Deterministic population path from z1 under the fitted strategy."""
        check_is_fitted(self, "theta_")
        return induce_trajectory(z1, self.theta_, self.grid_, self.model_,
                                 n_steps)


class FiniteHorizonSolver(_SolverMixin, BaseEstimator):
    """Backward-recursion equilibrium solver for finite-horizon games.

    Parameters mirror :class:`~mfgsolve.stage.FixedPointOptions` plus the grid
    resolution. After ``fit``, ``theta_`` holds the per-stage prescription
    tables, ``values_`` the (T+1, n_points, n_types) value stack, and
    ``diagnostics_`` per-(stage, point) solve summaries.
    """

    def __init__(self, resolution=20, damping=0.5, max_iters=100, tol=1e-9,
                 tie_break="lowest", fallback=True, strict=False, n_threads=1):
        self.resolution = resolution
        self.damping = damping
        self.max_iters = max_iters
        self.tol = tol
        self.tie_break = tie_break
        self.fallback = fallback
        self.strict = strict
        self.n_threads = n_threads

    def fit(self, model: GameModel, terminal: np.ndarray | None = None):
        if not model.is_finite:
            raise ValueError("FiniteHorizonSolver requires a finite-horizon model")
        grid = SimplexGrid(self.resolution, model.n_types)
        solution = solve_finite(model, grid, self._fp_options(),
                                terminal=terminal, strict=self.strict,
                                n_threads=self.n_threads)
        self.model_ = model
        self.grid_ = grid
        self.solution_ = solution
        self.theta_ = solution.theta
        self.values_ = solution.values
        self.diagnostics_ = solution.diagnostics
        self.strategy_ = assemble_strategy(solution.theta, grid)
        return self

    def value(self, z, x: int | None = None, stage: int = 1):
        """Interpolated reward-to-go at (z, x) for a 1-based stage."""
        check_is_fitted(self, "values_")
        return interpolate(self.values_[stage - 1], self.grid_, z, x)


class InfiniteHorizonSolver(_SolverMixin, BaseEstimator):
    """Stationary equilibrium solver for discounted infinite-horizon games.

    ``fit`` runs value iteration with an embedded per-point equilibrium solve;
    the stationary prescription table lands in ``theta_``, converged values in
    ``value_``, and convergence info in ``sweeps_`` / ``final_sup_change_``.
    """

    def __init__(self, resolution=20, damping=0.5, max_iters=100, tol=1e-9,
                 tie_break="lowest", fallback=True, sup_tol=1e-8,
                 max_sweeps=500, strict=False, n_threads=1):
        self.resolution = resolution
        self.damping = damping
        self.max_iters = max_iters
        self.tol = tol
        self.tie_break = tie_break
        self.fallback = fallback
        self.sup_tol = sup_tol
        self.max_sweeps = max_sweeps
        self.strict = strict
        self.n_threads = n_threads

    def fit(self, model: GameModel, terminal=None):
        if model.is_finite:
            raise ValueError(
                "InfiniteHorizonSolver requires an infinite-horizon model")
        if terminal is not None:
            raise ValueError("terminal rewards apply to finite horizons only")
        grid = SimplexGrid(self.resolution, model.n_types)
        solution = solve_infinite(model, grid, self._fp_options(),
                                  sup_tol=self.sup_tol,
                                  max_sweeps=self.max_sweeps,
                                  strict=self.strict, n_threads=self.n_threads)
        self.model_ = model
        self.grid_ = grid
        self.solution_ = solution
        self.theta_ = solution.theta
        self.value_ = solution.value
        self.sweeps_ = solution.sweeps
        self.final_sup_change_ = solution.final_sup_change
        self.diagnostics_ = solution.diagnostics
        self.strategy_ = assemble_strategy(solution.theta, grid)
        return self

    def value(self, z, x: int | None = None):
        """Interpolated stationary reward-to-go at (z, x)."""
        check_is_fitted(self, "value_")
        return interpolate(self.value_, self.grid_, z, x)
