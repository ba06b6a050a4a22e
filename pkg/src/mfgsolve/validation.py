"""Input validation helpers shared across the package.

These mirror the sklearn ``check_array`` idiom: accept array-likes, return
validated float64 numpy arrays, raise ``ValueError`` with a pointed message
otherwise.
"""
from __future__ import annotations

import numpy as np

SIMPLEX_TOL = 1e-12


def check_mean_field(z, n_types: int | None = None, tol: float = SIMPLEX_TOL) -> np.ndarray:
    """Validate a population state: nonnegative vector summing to 1."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 1:
        raise ValueError(f"mean field must be a 1-d vector, got shape {z.shape}")
    if n_types is not None and z.shape[0] != n_types:
        raise ValueError(f"mean field has length {z.shape[0]}, expected {n_types}")
    if not np.all(np.isfinite(z)):
        raise ValueError("mean field contains non-finite entries")
    if z.min() < -tol:
        raise ValueError(f"mean field has negative entry {z.min()!r}")
    if abs(z.sum() - 1.0) > max(tol, 1e-12):
        raise ValueError(f"mean field sums to {z.sum()!r}, expected 1")
    return z


def check_prescription(
    gamma, n_types: int | None = None, n_actions: int | None = None,
    tol: float = SIMPLEX_TOL,
) -> np.ndarray:
    """Validate a prescription: row-stochastic (n_types, n_actions) matrix."""
    gamma = np.asarray(gamma, dtype=float)
    if gamma.ndim != 2:
        raise ValueError(f"prescription must be a matrix, got shape {gamma.shape}")
    if n_types is not None and gamma.shape[0] != n_types:
        raise ValueError(f"prescription has {gamma.shape[0]} rows, expected {n_types}")
    if n_actions is not None and gamma.shape[1] != n_actions:
        raise ValueError(
            f"prescription has {gamma.shape[1]} columns, expected {n_actions}"
        )
    if not np.all(np.isfinite(gamma)):
        raise ValueError("prescription contains non-finite entries")
    if gamma.min() < -tol:
        raise ValueError(f"prescription has negative entry {gamma.min()!r}")
    row_sums = gamma.sum(axis=1)
    bad = np.abs(row_sums - 1.0) > max(tol, 1e-12)
    if np.any(bad):
        x = int(np.argmax(bad))
        raise ValueError(f"prescription row {x} sums to {row_sums[x]!r}, expected 1")
    return gamma


def check_value_table(values, n_points: int, n_types: int) -> np.ndarray:
    """Validate a value table over (grid point, type)."""
    values = np.asarray(values, dtype=float)
    if values.shape != (n_points, n_types):
        raise ValueError(
            f"value table has shape {values.shape}, expected ({n_points}, {n_types})"
        )
    if not np.all(np.isfinite(values)):
        raise ValueError("value table contains non-finite entries")
    return values
