"""Uniform simplex lattice with barycentric interpolation.

The equilibrium generating function and the value function live on a grid of
population states: all probability vectors whose coordinates are integer
multiples of 1/M. Off-grid evaluation uses the Kuhn (Freudenthal)
triangulation of the lattice, which yields convex barycentric weights and
reproduces affine functions exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .validation import check_prescription

# points closer than this (in lattice units) to a lattice hyperplane are
# snapped onto it, keeping vertex lookups exact for on-grid queries
_SNAP_TOL = 1e-9
_OFF_SIMPLEX_TOL = 1e-9


class SimplexGrid:
    """All compositions of ``resolution`` into ``n_types`` parts, scaled by 1/M.

    Points are ordered lexicographically by their integer count vectors, so
    for two types the first coordinate ascends: (0, 1), (1/M, (M-1)/M), ...,
    (1, 0). The integer count vectors are kept alongside the float coordinates
    so grid points are exact.
    """

    def __init__(self, resolution: int, n_types: int):
        if resolution < 1:
            raise ValueError(f"grid resolution must be >= 1, got {resolution}")
        if n_types < 1:
            raise ValueError(f"n_types must be >= 1, got {n_types}")
        self.resolution = int(resolution)
        self.n_types = int(n_types)
        self.counts = _compositions(self.resolution, self.n_types)
        self.points = self.counts / float(self.resolution)
        # integer radix encoding of count vectors, for vectorized lookup
        self._radix = (self.resolution + 1) ** np.arange(self.n_types - 1, -1, -1,
                                                         dtype=np.int64)
        keys = self.counts @ self._radix
        self._key_order = np.argsort(keys)
        self._sorted_keys = keys[self._key_order]

    @property
    def n_points(self) -> int:
        return self.counts.shape[0]

    def __len__(self) -> int:
        return self.n_points

    def index_of(self, counts) -> int:
        """Index of an exact lattice point given by its integer counts."""
        counts = np.asarray(counts, dtype=np.int64)
        idx = self._lookup(counts.reshape(1, -1))
        if idx[0] < 0:
            raise KeyError(f"{counts.tolist()} is not a lattice point")
        return int(idx[0])

    def _lookup(self, count_rows: np.ndarray) -> np.ndarray:
        """Map integer count rows to point indices; -1 where not on the lattice."""
        keys = count_rows @ self._radix
        pos = np.searchsorted(self._sorted_keys, keys)
        pos = np.clip(pos, 0, self.n_points - 1)
        found = self._sorted_keys[pos] == keys
        out = np.where(found, self._key_order[pos], -1)
        return out

    def locate(self, z_batch: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Enclosing-simplex vertices and barycentric weights for each query.

        Parameters
        ----------
        z_batch : (m, n_types) array of points on the simplex.

        Returns
        -------
        indices : (m, n_types) int array of grid point indices.
        weights : (m, n_types) array of convex weights (each row sums to 1).
            Unused vertex slots carry weight 0 and index 0.
        """
        z = np.atleast_2d(np.asarray(z_batch, dtype=float))
        m, n = z.shape
        if n != self.n_types:
            raise ValueError(f"points have dimension {n}, expected {self.n_types}")
        if not np.all(np.isfinite(z)):
            raise ValueError("query point contains non-finite entries")
        if z.min() < -_OFF_SIMPLEX_TOL or np.abs(z.sum(axis=1) - 1.0).max() > _OFF_SIMPLEX_TOL:
            raise ValueError("query point is off the simplex beyond tolerance")
        if n == 1:
            return np.zeros((m, 1), dtype=np.int64), np.ones((m, 1))

        mres = self.resolution
        zc = np.clip(z, 0.0, None)
        # cumulative coordinates c_j = M * sum_{i >= j} z_i for j = 1..n-1;
        # the simplex maps onto the ordered region M >= c_1 >= ... >= c_{n-1} >= 0
        rev_cumsum = np.cumsum(zc[:, ::-1], axis=1)[:, :-1]
        c = mres * rev_cumsum[:, ::-1]
        snapped = np.rint(c)
        c = np.where(np.abs(c - snapped) <= _SNAP_TOL, snapped, c)
        c = np.clip(c, 0.0, float(mres))

        base = np.floor(c).astype(np.int64)
        frac = c - base
        order = np.argsort(-frac, axis=1, kind="stable")
        frac_sorted = np.take_along_axis(frac, order, axis=1)

        weights = np.empty((m, n))
        weights[:, 0] = 1.0 - frac_sorted[:, 0]
        if n > 2:
            weights[:, 1:-1] = frac_sorted[:, :-1] - frac_sorted[:, 1:]
        weights[:, -1] = frac_sorted[:, -1]
        weights = np.clip(weights, 0.0, None)

        # walk the Kuhn simplex: increment cumulative coordinates in order of
        # decreasing fractional part
        verts = np.empty((m, n, n - 1), dtype=np.int64)
        verts[:, 0, :] = base
        rows = np.arange(m)
        for i in range(1, n):
            verts[:, i, :] = verts[:, i - 1, :]
            verts[rows, i, order[:, i - 1]] += 1

        # cumulative coordinates back to count vectors
        comps = np.empty((m, n, n), dtype=np.int64)
        comps[:, :, 0] = mres - verts[:, :, 0]
        if n > 2:
            comps[:, :, 1:-1] = verts[:, :, :-1] - verts[:, :, 1:]
        comps[:, :, -1] = verts[:, :, -1]

        indices = self._lookup(comps.reshape(m * n, n)).reshape(m, n)
        missing = indices < 0
        if np.any(missing):
            # only zero-weight vertices may step outside the lattice
            if weights[missing].max(initial=0.0) > 1e-9:
                raise AssertionError("interpolation vertex left the lattice")
            weights[missing] = 0.0
            indices[missing] = 0
        weights /= weights.sum(axis=1, keepdims=True)
        return indices, weights

    def interpolate_table(self, table: np.ndarray, z_batch: np.ndarray) -> np.ndarray:
        """Barycentric interpolation of a per-grid-point table at query points.

        ``table`` has shape (n_points, ...); returns shape (m, ...).
        """
        table = np.asarray(table, dtype=float)
        idx, w = self.locate(z_batch)
        gathered = table[idx]  # (m, n_verts, ...)
        w_shaped = w.reshape(w.shape + (1,) * (table.ndim - 1))
        return (gathered * w_shaped).sum(axis=1)


def _compositions(total: int, parts: int) -> np.ndarray:
    """All nonnegative integer vectors of given length summing to ``total``,
    in lexicographic order."""
    if parts == 1:
        return np.array([[total]], dtype=np.int64)
    rows = []
    stack = [(0, total, [])]
    # iterative depth-first enumeration keeps lexicographic order
    while stack:
        depth, remaining, prefix = stack.pop()
        if depth == parts - 1:
            rows.append(prefix + [remaining])
            continue
        for v in range(remaining, -1, -1):
            stack.append((depth + 1, remaining - v, prefix + [v]))
    arr = np.array(rows, dtype=np.int64)
    assert arr.shape[0] == comb(total + parts - 1, parts - 1)
    return arr


def grid_points(resolution: int, n_types: int) -> SimplexGrid:
    """Build the uniform simplex lattice of the given resolution."""
    return SimplexGrid(resolution, n_types)


def interpolate(values: np.ndarray, grid: SimplexGrid, z, x: int | None = None):
    """Interpolate a value table (n_points, n_types) at population state z.

    Returns the value for type ``x``, or the full per-type vector when ``x``
    is None. Exact at grid points; always within the convex hull of the
    enclosing simplex's vertex values.
    """
    values = np.asarray(values, dtype=float)
    if values.shape[0] != grid.n_points:
        raise ValueError(
            f"value table has {values.shape[0]} rows, expected {grid.n_points}"
        )
    out = grid.interpolate_table(values, np.asarray(z, dtype=float).reshape(1, -1))[0]
    if x is None:
        return out
    return float(out[x])


def interpolate_prescription(theta_table, grid: SimplexGrid, z) -> np.ndarray:
    """Interpolate a per-grid-point prescription table at population state z.

    ``theta_table`` is an (n_points, n_types, n_actions) array (one stage of
    an equilibrium generating function) or a stationary
    :class:`EquilibriumGenerator`. Convex combinations of row-stochastic
    matrices are row-stochastic, so the result is a valid prescription.
    """
    if isinstance(theta_table, EquilibriumGenerator):
        if not theta_table.stationary:
            raise ValueError("pass a single stage table for staged generators")
        theta_table = theta_table.tables[0]
    table = np.asarray(theta_table, dtype=float)
    if table.ndim != 3 or table.shape[0] != grid.n_points:
        raise ValueError(
            f"prescription table has shape {table.shape}, expected "
            f"({grid.n_points}, n_types, n_actions)"
        )
    gamma = grid.interpolate_table(table, np.asarray(z, dtype=float).reshape(1, -1))[0]
    gamma = np.clip(gamma, 0.0, None)
    gamma /= gamma.sum(axis=1, keepdims=True)
    return check_prescription(gamma)


@dataclass(frozen=True)
class EquilibriumGenerator:
    """Map from grid population states to prescriptions.

    ``tables`` has shape (n_stages, n_points, n_types, n_actions). A
    stationary generator stores a single stage used at every time.
    """

    tables: np.ndarray
    stationary: bool

    def __post_init__(self):
        tables = np.asarray(self.tables, dtype=float)
        if tables.ndim != 4:
            raise ValueError(f"expected 4-d tables, got shape {tables.shape}")
        if self.stationary and tables.shape[0] != 1:
            raise ValueError("stationary generator must hold exactly one stage")
        object.__setattr__(self, "tables", tables)

    @property
    def n_stages(self) -> int:
        return self.tables.shape[0]

    def table_for_stage(self, t: int) -> np.ndarray:
        """Stage table for 1-based time index t."""
        if self.stationary:
            return self.tables[0]
        if not 1 <= t <= self.n_stages:
            raise ValueError(f"stage {t} outside 1..{self.n_stages}")
        return self.tables[t - 1]
