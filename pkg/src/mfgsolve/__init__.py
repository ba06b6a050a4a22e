"""Equilibrium computation for discrete-time mean-field games.

The package solves for Markov perfect equilibria of symmetric games where a
continuum of agents interact through the distribution of their private types:
finite horizons by backward recursion, infinite horizons by value iteration,
both built on a per-population-state prescription fixed point. Solutions can
be certified by an independent best-response dynamic program and stress-tested
against finite-N Monte Carlo simulation.
"""

from .dynamics import propagate
from .estimators import FiniteHorizonSolver, InfiniteHorizonSolver
from .families import (ConfigError, LoadedConfig, config_from_dict,
                       load_config, malware_model, tabular_affine_model)
from .grid import (EquilibriumGenerator, SimplexGrid, grid_points, interpolate,
                   interpolate_prescription)
from .model import (GameModel, ModelError, kernel_tensor, max_abs_reward,
                    reward_table, validate_model_on_grid)
from .solve import (FiniteSolution, InfiniteSolution, NoConvergenceError,
                    PointDiagnostic, SolveError, StrategyEvaluator,
                    assemble_strategy, induce_trajectory, solve_finite,
                    solve_infinite)
from .stage import (FixedPointOptions, FixedPointResult, Method, StageProblem,
                    TieBreak, best_response, solve_stage_fixed_point,
                    stage_value)
from .validation import check_mean_field, check_prescription, check_value_table
from .verify import (DeviatorProblem, GapReport, PopulationRun, deviator_value,
                     gap_tolerance, simulate_population, truncation_bound)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DeviatorProblem",
    "EquilibriumGenerator",
    "FiniteHorizonSolver",
    "FiniteSolution",
    "FixedPointOptions",
    "FixedPointResult",
    "GameModel",
    "GapReport",
    "InfiniteHorizonSolver",
    "InfiniteSolution",
    "LoadedConfig",
    "Method",
    "ModelError",
    "NoConvergenceError",
    "PointDiagnostic",
    "PopulationRun",
    "SimplexGrid",
    "SolveError",
    "StageProblem",
    "StrategyEvaluator",
    "TieBreak",
    "assemble_strategy",
    "best_response",
    "check_mean_field",
    "check_prescription",
    "check_value_table",
    "config_from_dict",
    "deviator_value",
    "gap_tolerance",
    "grid_points",
    "induce_trajectory",
    "interpolate",
    "interpolate_prescription",
    "kernel_tensor",
    "load_config",
    "malware_model",
    "max_abs_reward",
    "propagate",
    "reward_table",
    "simulate_population",
    "solve_finite",
    "solve_infinite",
    "solve_stage_fixed_point",
    "stage_value",
    "tabular_affine_model",
    "truncation_bound",
    "validate_model_on_grid",
]
