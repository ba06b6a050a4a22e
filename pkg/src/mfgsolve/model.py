"""Core domain types for discrete-time mean-field games.

A game couples a finite private-type space with a population state z, a
probability vector giving the fraction of agents holding each type. Both the
per-agent transition kernel and the per-stage reward may depend on z; that
coupling is the only channel through which agents interact.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

# kernel(x, a, z) -> probability vector over next types
Kernel = Callable[[int, int, np.ndarray], np.ndarray]
# reward(x, a, z) -> per-stage payoff
RewardFn = Callable[[int, int, np.ndarray], float]

STOCHASTIC_TOL = 1e-12


class ModelError(ValueError):
    """A model component (kernel, reward, dimensions) violates its contract."""


@dataclass(frozen=True)
class GameModel:
    """One mean-field game: type/action spaces, dynamics, reward, discounting.

    Parameters
    ----------
    n_types : int
        Size of the private type space (types are indices ``0..n_types-1``).
    n_actions : int
        Size of the action space (indices ``0..n_actions-1``).
    kernel : callable
        ``kernel(x, a, z)`` returns the next-type distribution as a length
        ``n_types`` vector. Must be row-stochastic for every z on the simplex
        and continuous in z.
    reward : callable
        ``reward(x, a, z)`` returns a finite per-stage payoff.
    discount : float
        Per-stage discount factor. Finite horizon admits ``0 < discount <= 1``;
        infinite horizon requires ``0 < discount < 1``.
    horizon : int or None
        Number of stages for a finite game, ``None`` for infinite horizon.
    """

    n_types: int
    n_actions: int
    kernel: Kernel
    reward: RewardFn
    discount: float
    horizon: int | None = None

    def __post_init__(self):
        if self.n_types < 1 or self.n_actions < 1:
            raise ModelError("n_types and n_actions must be positive")
        if self.horizon is None:
            if not 0.0 < self.discount < 1.0:
                raise ModelError(
                    f"infinite horizon requires 0 < discount < 1, got {self.discount}"
                )
        else:
            if self.horizon < 1:
                raise ModelError(f"finite horizon must be >= 1, got {self.horizon}")
            if not 0.0 < self.discount <= 1.0:
                raise ModelError(
                    f"finite horizon requires 0 < discount <= 1, got {self.discount}"
                )

    @property
    def is_finite(self) -> bool:
        return self.horizon is not None


def kernel_tensor(model: GameModel, z: np.ndarray) -> np.ndarray:
    """Evaluate the transition kernel at z for every (type, action) pair.

    Returns an array ``Q`` of shape ``(n_types, n_actions, n_types)`` with
    ``Q[x, a, y] = P(next type = y | x, a, z)``. Raises :class:`ModelError`
    naming the offending (x, a) if any row is not a probability vector.
    """
    q = np.empty((model.n_types, model.n_actions, model.n_types))
    for x in range(model.n_types):
        for a in range(model.n_actions):
            row = np.asarray(model.kernel(x, a, z), dtype=float)
            if row.shape != (model.n_types,):
                raise ModelError(
                    f"kernel(x={x}, a={a}) returned shape {row.shape}, "
                    f"expected ({model.n_types},)"
                )
            if not np.all(np.isfinite(row)) or row.min() < -STOCHASTIC_TOL:
                raise ModelError(f"kernel row for (x={x}, a={a}) has invalid entries")
            if abs(row.sum() - 1.0) > STOCHASTIC_TOL:
                raise ModelError(
                    f"kernel row for (x={x}, a={a}) sums to {row.sum()!r}, expected 1"
                )
            q[x, a] = np.clip(row, 0.0, None)
    return q


def reward_table(model: GameModel, z: np.ndarray) -> np.ndarray:
    """Evaluate the reward at z for every (type, action) pair.

    Returns an ``(n_types, n_actions)`` array; raises :class:`ModelError` on
    non-finite values.
    """
    r = np.empty((model.n_types, model.n_actions))
    for x in range(model.n_types):
        for a in range(model.n_actions):
            val = float(model.reward(x, a, z))
            if not np.isfinite(val):
                raise ModelError(f"reward(x={x}, a={a}) is not finite: {val!r}")
            r[x, a] = val
    return r


def validate_model_on_grid(model: GameModel, grid, n_random: int = 100, seed: int = 0):
    """Spot-check kernel stochasticity and reward finiteness on the simplex.

    Evaluates the model on every grid point plus ``n_random`` random simplex
    points (deterministic for a fixed seed). Continuity in z cannot be checked
    mechanically; this guards against the common failure modes instead.
    """
    points = [grid.points[i] for i in range(grid.n_points)]
    rng = np.random.default_rng(seed)
    if n_random > 0 and model.n_types > 0:
        extra = rng.dirichlet(np.ones(model.n_types), size=n_random)
        points.extend(extra)
    for z in points:
        kernel_tensor(model, z)
        reward_table(model, z)


def max_abs_reward(model: GameModel, grid) -> float:
    """Largest |reward| over grid points; the scale used in value bounds."""
    best = 0.0
    for i in range(grid.n_points):
        best = max(best, float(np.abs(reward_table(model, grid.points[i])).max()))
    return best
