"""Built-in model families and JSON configuration loading.

Two families are provided. ``malware`` is a two-type infection/repair game:
healthy nodes (type 0) get infected with probability q unless they act;
acting (repair) always restores type 0; being infected costs the base risk k
plus the infected fraction of the population, and acting costs lam. The
``tabular_affine`` family generalizes it: kernels and rewards are arbitrary
tables mixed affinely by the population state, so continuity in z holds by
construction.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .grid import SimplexGrid
from .model import GameModel, validate_model_on_grid
from .stage import FixedPointOptions, TieBreak


class ConfigError(ValueError):
    """A configuration file is malformed or violates a model invariant."""


def malware_model(k: float, lam: float, q: float, discount: float,
                  horizon: int | None = None) -> GameModel:
    """Two-type infection game: do nothing (may get infected) or repair."""
    if k < 0:
        raise ConfigError(f"malware model requires k >= 0, got {k}")
    if lam < 0:
        raise ConfigError(f"malware model requires lam >= 0, got {lam}")
    if not 0.0 <= q <= 1.0:
        raise ConfigError(f"malware model requires q ∈ [0,1], got {q}")

    stay = np.array([1.0 - q, q])
    healthy = np.array([1.0, 0.0])
    infected = np.array([0.0, 1.0])

    def kernel(x, a, z):
        if a == 1:
            return healthy
        return stay if x == 0 else infected

    def reward(x, a, z):
        return -(k + z[1]) * x - lam * a

    return GameModel(n_types=2, n_actions=2, kernel=kernel, reward=reward,
                     discount=discount, horizon=horizon)


def tabular_affine_model(kernels, reward_base, reward_mix, discount: float,
                         horizon: int | None = None) -> GameModel:
    """Kernels and rewards that mix tabular slices by the population state.

    ``kernels[y][x][a]`` is the next-type distribution when the mixing type is
    y, so the effective kernel is  Q(.|x,a,z) = sum_y z(y) * kernels[y][x][a].
    The reward is  reward_base[x][a] + sum_y z(y) * reward_mix[x][a][y].
    """
    kern = np.asarray(kernels, dtype=float)
    r0 = np.asarray(reward_base, dtype=float)
    r1 = np.asarray(reward_mix, dtype=float)
    if kern.ndim != 4 or kern.shape[0] != kern.shape[3] or kern.shape[1] != kern.shape[0]:
        raise ConfigError(
            "kernels must have shape (n_types, n_types, n_actions, n_types), "
            f"got {kern.shape}"
        )
    n_types, _, n_actions, _ = kern.shape
    if r0.shape != (n_types, n_actions):
        raise ConfigError(f"reward_base must have shape ({n_types}, {n_actions})")
    if r1.shape != (n_types, n_actions, n_types):
        raise ConfigError(
            f"reward_mix must have shape ({n_types}, {n_actions}, {n_types})"
        )
    if not (np.all(np.isfinite(kern)) and np.all(np.isfinite(r0))
            and np.all(np.isfinite(r1))):
        raise ConfigError("model tables contain non-finite values")
    if kern.min() < 0:
        raise ConfigError("kernel slices contain negative probabilities")
    sums = kern.sum(axis=3)
    bad = np.argwhere(np.abs(sums - 1.0) > 1e-12)
    if bad.size:
        y, x, a = bad[0]
        raise ConfigError(
            f"kernel row for (y={y}, x={x}, a={a}) sums to {sums[y, x, a]!r}, "
            "expected 1"
        )

    def kernel(x, a, z):
        return z @ kern[:, x, a, :]

    def reward(x, a, z):
        return r0[x, a] + float(z @ r1[x, a, :])

    return GameModel(n_types=n_types, n_actions=n_actions, kernel=kernel,
                     reward=reward, discount=discount, horizon=horizon)


@dataclass(frozen=True)
class LoadedConfig:
    """A validated configuration: model, grid, and solver options."""

    model: GameModel
    grid: SimplexGrid
    fp_options: FixedPointOptions
    sup_tol: float
    max_sweeps: int
    gap_tol: float
    t_trunc: int
    family: str
    seed: int
    raw: dict = field(repr=False, default_factory=dict)


def _parse_horizon(value):
    if value is None or value == "infinite":
        return None
    if isinstance(value, bool):
        raise ConfigError(f"invalid horizon {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, dict) and "T" in value:
        return int(value["T"])
    raise ConfigError(f"invalid horizon {value!r}; use an integer or \"infinite\"")


def _build_model(family, params, discount, horizon):
    if family == "malware":
        wanted = {"k", "lambda", "q"}
        missing = wanted - params.keys()
        if missing:
            raise ConfigError(f"malware params missing {sorted(missing)}")
        return malware_model(k=params["k"], lam=params["lambda"], q=params["q"],
                             discount=discount, horizon=horizon)
    if family == "tabular_affine":
        wanted = {"kernels", "reward_base", "reward_mix"}
        missing = wanted - params.keys()
        if missing:
            raise ConfigError(f"tabular_affine params missing {sorted(missing)}")
        return tabular_affine_model(kernels=params["kernels"],
                                    reward_base=params["reward_base"],
                                    reward_mix=params["reward_mix"],
                                    discount=discount, horizon=horizon)
    raise ConfigError(f"unknown model family {family!r}")


def config_from_dict(cfg: dict) -> LoadedConfig:
    """Validate a parsed configuration dictionary."""
    if not isinstance(cfg, dict):
        raise ConfigError("configuration root must be an object")
    for key in ("family", "discount", "grid_resolution"):
        if key not in cfg:
            raise ConfigError(f"configuration is missing required key {key!r}")

    family = cfg["family"]
    params = cfg.get("params", {})
    discount = float(cfg["discount"])
    horizon = _parse_horizon(cfg.get("horizon"))
    resolution = int(cfg["grid_resolution"])
    if resolution < 1:
        raise ConfigError(f"grid_resolution must be >= 1, got {resolution}")

    model = _build_model(family, params, discount, horizon)
    grid = SimplexGrid(resolution, model.n_types)
    validate_model_on_grid(model, grid)

    solver = cfg.get("solver", {})
    tie = solver.get("tie_break", "lowest")
    try:
        tie_break = TieBreak(tie)
    except ValueError:
        raise ConfigError(f"unknown tie_break {tie!r}; use 'lowest' or 'uniform'")
    fp_options = FixedPointOptions(
        damping=float(solver.get("damping", 0.5)),
        max_iters=int(solver.get("max_iters", 100)),
        tol=float(solver.get("tol", 1e-9)),
        tie_break=tie_break,
        fallback=bool(solver.get("fallback", True)),
    )

    return LoadedConfig(
        model=model,
        grid=grid,
        fp_options=fp_options,
        sup_tol=float(solver.get("sup_tol", 1e-8)),
        max_sweeps=int(solver.get("max_sweeps", 500)),
        gap_tol=float(cfg.get("verify", {}).get("gap_tol", 1e-3)),
        t_trunc=int(cfg.get("verify", {}).get("t_trunc", 200)),
        family=family,
        seed=int(cfg.get("seed", 0)),
        raw=cfg,
    )


def load_config(path) -> LoadedConfig:
    """Load and validate a JSON configuration file."""
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: parse error at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}"
        ) from exc
    return config_from_dict(cfg)
