"""Flat-file output formats and the run manifest.

All floats are printed with 17 significant digits so CSV round-trips
reproduce the in-memory float64 values exactly.
"""
from __future__ import annotations

import csv
import datetime
import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .grid import EquilibriumGenerator, SimplexGrid

__version__ = "0.1.0"

_FLOAT_FMT = "%.17g"


def _fmt(x) -> str:
    return _FLOAT_FMT % float(x)


def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    """Reproducibility record attached to every report."""

    config_hash: str
    tool_version: str
    seed: int
    timestamp: str
    options: dict

    @staticmethod
    def create(cfg: dict, seed: int, options: dict) -> "RunManifest":
        return RunManifest(
            config_hash=config_hash(cfg),
            tool_version=__version__,
            seed=seed,
            timestamp=datetime.datetime.now(datetime.timezone.utc).isoformat(),
            options=options,
        )

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "tool_version": self.tool_version,
            "seed": self.seed,
            "timestamp": self.timestamp,
            "options": self.options,
        }


def _coord_header(n_types):
    return [f"z{i}" for i in range(n_types)]


def write_theta_csv(path, theta: EquilibriumGenerator, grid: SimplexGrid):
    """Rows: stage (1-based or 'inf'), grid coordinates, type, action, probability."""
    n_stages = theta.n_stages
    n_types, n_actions = theta.tables.shape[2], theta.tables.shape[3]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["stage"] + _coord_header(grid.n_types)
                        + ["type", "action", "probability"])
        for s in range(n_stages):
            stage = "inf" if theta.stationary else str(s + 1)
            for p in range(grid.n_points):
                coords = [_fmt(c) for c in grid.points[p]]
                for x in range(n_types):
                    for a in range(n_actions):
                        writer.writerow([stage] + coords
                                        + [x, a, _fmt(theta.tables[s, p, x, a])])


def read_theta_csv(path, grid: SimplexGrid, n_types: int,
                   n_actions: int) -> EquilibriumGenerator:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[0] != "stage":
            raise ValueError(f"{path}: unexpected header {header!r}")
        rows = list(reader)
    stationary = rows[0][0] == "inf"
    stages = 1 if stationary else max(int(r[0]) for r in rows)
    tables = np.zeros((stages, grid.n_points, n_types, n_actions))
    seen = np.zeros(tables.shape, dtype=bool)
    for r in rows:
        s = 0 if stationary else int(r[0]) - 1
        coords = np.array([float(c) for c in r[1:1 + grid.n_types]])
        counts = np.rint(coords * grid.resolution).astype(np.int64)
        p = grid.index_of(counts)
        x, a = int(r[1 + grid.n_types]), int(r[2 + grid.n_types])
        tables[s, p, x, a] = float(r[3 + grid.n_types])
        seen[s, p, x, a] = True
    if not seen.all():
        raise ValueError(f"{path}: incomplete prescription table")
    return EquilibriumGenerator(tables=tables, stationary=stationary)


def write_value_csv(path, values: np.ndarray, grid: SimplexGrid,
                    stationary: bool):
    """Rows: stage, grid coordinates, type, value. Stationary tables write a
    single 'inf' stage; finite stacks write stages 1..T+1."""
    values = np.asarray(values, dtype=float)
    stack = values[None] if values.ndim == 2 else values
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["stage"] + _coord_header(grid.n_types)
                        + ["type", "value"])
        for s in range(stack.shape[0]):
            stage = "inf" if stationary else str(s + 1)
            for p in range(grid.n_points):
                coords = [_fmt(c) for c in grid.points[p]]
                for x in range(stack.shape[2]):
                    writer.writerow([stage] + coords + [x, _fmt(stack[s, p, x])])


def read_value_csv(path, grid: SimplexGrid, n_types: int) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        rows = list(reader)
    stationary = rows[0][0] == "inf"
    stages = 1 if stationary else max(int(r[0]) for r in rows)
    stack = np.zeros((stages, grid.n_points, n_types))
    for r in rows:
        s = 0 if stationary else int(r[0]) - 1
        coords = np.array([float(c) for c in r[1:1 + grid.n_types]])
        counts = np.rint(coords * grid.resolution).astype(np.int64)
        p = grid.index_of(counts)
        x = int(r[1 + grid.n_types])
        stack[s, p, x] = float(r[2 + grid.n_types])
    return stack[0] if stationary else stack


def write_plotdata_csv(path, theta_table: np.ndarray, values: np.ndarray,
                       grid: SimplexGrid):
    """Two-type profile: z(0), action-1 probabilities per type, values per type.

    Rows ascend in z(0), matching the natural grid order.
    """
    if grid.n_types != 2:
        raise ValueError("plot data is defined for 2-type models only")
    has_action1 = theta_table.shape[2] > 1
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["z0", "gamma1_type0", "gamma1_type1",
                         "value_type0", "value_type1"])
        for p in range(grid.n_points):
            writer.writerow([
                _fmt(grid.points[p, 0]),
                _fmt(theta_table[p, 0, 1] if has_action1 else 0.0),
                _fmt(theta_table[p, 1, 1] if has_action1 else 0.0),
                _fmt(values[p, 0]),
                _fmt(values[p, 1]),
            ])


def write_trajectory_csv(path, empirical: np.ndarray, predicted: np.ndarray):
    n_types = empirical.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"]
                        + [f"empirical_z{i}" for i in range(n_types)]
                        + [f"predicted_z{i}" for i in range(n_types)])
        for t in range(empirical.shape[0]):
            writer.writerow([t + 1]
                            + [_fmt(v) for v in empirical[t]]
                            + [_fmt(v) for v in predicted[t]])


def diagnostics_summary(diagnostics) -> dict:
    """Aggregate per-point fixed-point diagnostics for a report."""
    if diagnostics and not hasattr(diagnostics[0], "residual"):
        stages = [diagnostics_summary(d) for d in diagnostics]
        return {
            "n_points": stages[0]["n_points"] if stages else 0,
            "stages": stages,
            "max_residual": max(s["max_residual"] for s in stages),
            "non_converged": sum(s["non_converged"] for s in stages),
        }
    return {
        "n_points": len(diagnostics),
        "max_residual": max((d.residual for d in diagnostics), default=0.0),
        "non_converged": sum(1 for d in diagnostics if not d.converged),
        "methods": {
            m.value: sum(1 for d in diagnostics if d.method is m)
            for m in {d.method for d in diagnostics}
        },
    }


def write_report_json(path, payload: dict):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
