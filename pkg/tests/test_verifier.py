import numpy as np
import pytest

import mfgsolve as m
from conftest import MALWARE_PARAMS


def single_action_frozen_model(horizon=None, discount=0.9):
    """One action, frozen types: the population never moves, so no
    interpolation or truncation error enters any value computation."""
    return m.GameModel(
        n_types=2, n_actions=1,
        kernel=lambda x, a, z: np.eye(2)[x],
        reward=lambda x, a, z: -(0.2 + z[1]) * x,
        discount=discount, horizon=horizon)


def uniform_theta(grid, n_types, n_actions):
    tables = np.full((grid.n_points, n_types, n_actions), 1.0 / n_actions)
    return tables


def test_gap_exactly_zero_single_action_finite():
    model = single_action_frozen_model(horizon=6)
    grid = m.grid_points(8, 2)
    solution = m.solve_finite(model, grid)
    problem = m.DeviatorProblem(theta=solution.theta, model=model, grid=grid)
    report = m.deviator_value(problem, solution.values)
    assert np.abs(report.gaps).max() <= 1e-12
    assert report.truncation_bound == 0.0


def test_gap_single_action_infinite_within_slack():
    model = single_action_frozen_model()
    grid = m.grid_points(6, 2)
    solution = m.solve_infinite(model, grid, sup_tol=1e-10)
    problem = m.DeviatorProblem(theta=solution.theta, model=model, grid=grid,
                                t_trunc=400)
    report = m.deviator_value(problem, solution.value)
    slack = report.truncation_bound + 1e-10 / (1 - model.discount)
    assert np.abs(report.gaps).max() <= slack + 1e-9


def test_gap_zero_for_myopic_discount():
    model = m.malware_model(k=0.2, lam=0.5, q=0.9, discount=1e-9)
    grid = m.grid_points(6, 2)
    solution = m.solve_infinite(model, grid, sup_tol=1e-14, max_sweeps=50)
    problem = m.DeviatorProblem(theta=solution.theta, model=model, grid=grid,
                                t_trunc=30)
    report = m.deviator_value(problem, solution.value)
    assert np.abs(report.gaps).max() <= 1e-8


def test_gap_malware_reference(malware_solved):
    model, grid, solution = malware_solved
    problem = m.DeviatorProblem(theta=solution.theta, model=model, grid=grid,
                                t_trunc=200)
    report = m.deviator_value(problem, solution.value)
    assert report.max_gap <= 1e-3
    # no start may show a meaningfully negative gap either: the deviator can
    # always follow the crowd, so W* only trails V by the numerical slack
    slack = report.truncation_bound + 2e-7
    assert report.gaps.min() >= -slack
    assert report.start_points.shape == (grid.n_points, 2)


def test_follow_theta_reproduces_equilibrium_value(malware_solved):
    model, grid, solution = malware_solved
    problem = m.DeviatorProblem(theta=solution.theta, model=model, grid=grid,
                                t_trunc=250)
    report = m.deviator_value(problem, solution.value, follow_theta=True)
    # forced to play the population strategy, the agent recovers V up to the
    # certification tolerance (off-grid interpolation is the dominant term)
    assert np.abs(report.deviator_values - report.equilibrium_values).max() \
        <= m.gap_tolerance(model, grid, t_trunc=250)


def test_tampered_theta_has_positive_gap(malware_solved):
    model, grid, solution = malware_solved
    tampered = np.zeros_like(solution.theta.tables[0])
    tampered[:, :, 1] = 1.0  # repair always, even when healthy near z=(1,0)
    problem = m.DeviatorProblem(theta=tampered, model=model, grid=grid,
                                t_trunc=200)
    report = m.deviator_value(problem, solution.value)
    assert report.max_gap > 1e-2


def test_horizon_misuse_errors(malware_solved_small):
    model, grid, solution = malware_solved_small
    with pytest.raises(ValueError):
        m.DeviatorProblem(theta=solution.theta, model=model, grid=grid)
    finite = m.malware_model(**MALWARE_PARAMS, horizon=2)
    fsol = m.solve_finite(finite, grid)
    with pytest.raises(ValueError):
        m.DeviatorProblem(theta=fsol.theta, model=finite, grid=grid,
                          t_trunc=10)


def test_truncation_bound_formula(malware_solved_small):
    model, grid, _ = malware_solved_small
    bound = m.truncation_bound(model, grid, 200)
    assert bound == pytest.approx(0.9 ** 200 * 2 * 1.7 / 0.1)


def test_simulate_single_agent_frozen_deterministic():
    model = single_action_frozen_model()
    grid = m.grid_points(4, 2)
    theta = uniform_theta(grid, 2, 1)
    run = m.simulate_population(model, theta, grid, n_agents=1,
                                z1=np.array([0.0, 1.0]), t_sim=20, seed=7)
    # one infected agent, frozen type: trajectory constant, reward closed form
    np.testing.assert_allclose(run.empirical, np.tile([0.0, 1.0], (21, 1)))
    expected = sum(-(0.2 + 1.0) * 0.9 ** t for t in range(20))
    assert run.discounted_rewards[0] == pytest.approx(expected, rel=1e-12)


def test_simulate_binomial_concentration(malware_solved_small):
    model, grid, _ = malware_solved_small
    never = np.zeros((grid.n_points, 2, 2))
    never[:, :, 0] = 1.0
    n = 100_000
    run = m.simulate_population(model, never, grid, n_agents=n,
                                z1=np.array([1.0, 0.0]), t_sim=1, seed=123)
    assert abs(run.empirical[1, 1] - 0.9) <= 3 * np.sqrt(0.9 * 0.1 / n)


def test_simulate_same_seed_identical(malware_solved_small):
    model, grid, solution = malware_solved_small
    kwargs = dict(n_agents=500, z1=np.array([0.5, 0.5]), t_sim=10, seed=42)
    a = m.simulate_population(model, solution.theta, grid, **kwargs)
    b = m.simulate_population(model, solution.theta, grid, **kwargs)
    assert np.array_equal(a.empirical, b.empirical)
    assert np.array_equal(a.discounted_rewards, b.discounted_rewards)
    c = m.simulate_population(model, solution.theta, grid,
                              n_agents=500, z1=np.array([0.5, 0.5]),
                              t_sim=10, seed=43)
    assert not np.array_equal(a.empirical, c.empirical)


def test_simulate_one_agent_boundary(malware_solved_small):
    model, grid, solution = malware_solved_small
    run = m.simulate_population(model, solution.theta, grid, n_agents=1,
                                z1=np.array([0.5, 0.5]), t_sim=5, seed=1)
    assert run.empirical.shape == (6, 2)
    assert set(np.unique(run.empirical)) <= {0.0, 1.0}


def test_simulate_argument_errors(malware_solved_small):
    model, grid, solution = malware_solved_small
    with pytest.raises(ValueError):
        m.simulate_population(model, solution.theta, grid, n_agents=0,
                              z1=np.array([0.5, 0.5]), t_sim=5, seed=1)
    with pytest.raises(ValueError):
        m.simulate_population(model, solution.theta, grid, n_agents=10,
                              z1=np.array([0.5, 0.5]), t_sim=5, seed=-3)


def test_simulate_rounded_initialization(malware_solved_small):
    model, grid, solution = malware_solved_small
    run = m.simulate_population(model, solution.theta, grid, n_agents=1000,
                                z1=np.array([0.4, 0.6]), t_sim=0, seed=5,
                                init="rounded")
    np.testing.assert_allclose(run.empirical[0], [0.4, 0.6])


def test_monte_carlo_value_matches_interpolated_value(malware_solved):
    model, grid, solution = malware_solved
    z1 = np.array([0.5, 0.5])
    run = m.simulate_population(model, solution.theta, grid, n_agents=100_000,
                                z1=z1, t_sim=100, seed=2024)
    sample_mean = run.discounted_rewards.mean()
    stderr = run.discounted_rewards.std(ddof=1) / np.sqrt(run.n_agents)
    expected = float(z1 @ m.interpolate(solution.value, grid, z1))
    tail = model.discount ** 100 * 1.7 / (1 - model.discount)
    assert abs(sample_mean - expected) <= 3 * stderr + tail + 1e-4


def test_mean_field_error_decreases_with_population(malware_solved_small):
    model, grid, solution = malware_solved_small
    errs = []
    for n in (100, 10_000):
        runs = [m.simulate_population(model, solution.theta, grid, n_agents=n,
                                      z1=np.array([0.5, 0.5]), t_sim=30,
                                      seed=s)
                for s in range(5)]
        errs.append(np.median([r.sup_l1_error for r in runs]))
    assert errs[1] < errs[0]
