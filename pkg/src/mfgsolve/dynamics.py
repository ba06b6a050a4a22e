"""Mean-field propagation: the forward population-state update.

When every agent applies the same prescription, the population state evolves
deterministically:

    z'(y) = sum_x sum_a z(x) * gamma(a|x) * Q(y | x, a, z)
"""
from __future__ import annotations

import numpy as np

from .model import GameModel, ModelError, kernel_tensor
from .validation import check_mean_field, check_prescription

_NEGATIVE_TOL = 1e-12
_DRIFT_TOL = 1e-10


def propagate(z, gamma, model: GameModel) -> np.ndarray:
    """One step of the deterministic population update under prescription gamma."""
    z = check_mean_field(z, model.n_types)
    gamma = check_prescription(gamma, model.n_types, model.n_actions)
    q = kernel_tensor(model, z)
    return propagate_tensor(z, gamma, q)


def propagate_tensor(z: np.ndarray, gamma: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Fast-path propagation with a pre-validated kernel tensor.

    Floating-point negatives down to -1e-12 are clamped to zero and the vector
    renormalized; anything worse indicates a broken model and raises.
    """
    out = np.einsum("x,xa,xay->y", z, gamma, q)
    low = out.min()
    if low < -_NEGATIVE_TOL:
        raise ModelError(f"propagated state has negative mass {low!r}")
    if low < 0.0:
        out = np.clip(out, 0.0, None)
    total = out.sum()
    if abs(total - 1.0) > _DRIFT_TOL:
        raise ModelError(f"propagated state sums to {total!r}; kernel is not stochastic")
    return out / total
