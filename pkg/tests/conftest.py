import numpy as np
import pytest

import mfgsolve as m

MALWARE_PARAMS = dict(k=0.2, lam=0.5, q=0.9, discount=0.9)


@pytest.fixture(scope="session")
def malware_solved():
    """Reference infinite-horizon solve of the malware game on the fine grid."""
    model = m.malware_model(**MALWARE_PARAMS)
    grid = m.grid_points(50, 2)
    solution = m.solve_infinite(model, grid, sup_tol=1e-8, max_sweeps=500)
    return model, grid, solution


@pytest.fixture(scope="session")
def malware_solved_small():
    """Same game on a coarse grid, for cheaper checks."""
    model = m.malware_model(**MALWARE_PARAMS)
    grid = m.grid_points(10, 2)
    solution = m.solve_infinite(model, grid, sup_tol=1e-8, max_sweeps=500)
    return model, grid, solution


def random_tabular_model(rng, n_types=2, n_actions=2, discount=0.9,
                         horizon=None):
    """A random population-coupled model (affine kernels and rewards)."""
    kern = rng.random((n_types, n_types, n_actions, n_types)) + 0.1
    kern /= kern.sum(axis=3, keepdims=True)
    r0 = rng.normal(size=(n_types, n_actions))
    r1 = rng.normal(size=(n_types, n_actions, n_types))
    return m.tabular_affine_model(kern, r0, r1, discount=discount,
                                  horizon=horizon)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
