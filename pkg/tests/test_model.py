import numpy as np
import pytest

import mfgsolve as m


def test_malware_reward_values():
    model = m.malware_model(k=0.2, lam=0.5, q=0.9, discount=0.9)
    z = np.array([0.5, 0.5])
    assert model.reward(0, 0, z) == 0.0
    assert model.reward(0, 1, z) == -0.5
    assert model.reward(1, 0, z) == pytest.approx(-0.7)
    assert model.reward(1, 1, z) == pytest.approx(-1.2)


def test_malware_kernel_rows():
    model = m.malware_model(k=0.2, lam=0.5, q=0.9, discount=0.9)
    z = np.array([0.3, 0.7])
    np.testing.assert_allclose(model.kernel(0, 0, z), [0.1, 0.9])
    np.testing.assert_allclose(model.kernel(1, 0, z), [0.0, 1.0])
    np.testing.assert_allclose(model.kernel(0, 1, z), [1.0, 0.0])
    np.testing.assert_allclose(model.kernel(1, 1, z), [1.0, 0.0])


def test_discount_bounds():
    with pytest.raises(m.ModelError):
        m.malware_model(k=0.2, lam=0.5, q=0.9, discount=1.0)  # infinite needs < 1
    m.malware_model(k=0.2, lam=0.5, q=0.9, discount=1.0, horizon=3)  # finite ok
    with pytest.raises(m.ModelError):
        m.malware_model(k=0.2, lam=0.5, q=0.9, discount=0.0, horizon=3)


def test_kernel_tensor_flags_bad_rows():
    def bad_kernel(x, a, z):
        if x == 1 and a == 0:
            return np.array([0.5, 0.4])
        return np.array([1.0, 0.0])

    model = m.GameModel(n_types=2, n_actions=2, kernel=bad_kernel,
                        reward=lambda x, a, z: 0.0, discount=0.9)
    with pytest.raises(m.ModelError, match=r"x=1, a=0"):
        m.kernel_tensor(model, np.array([0.5, 0.5]))


def test_reward_table_flags_nonfinite():
    model = m.GameModel(n_types=1, n_actions=2,
                        kernel=lambda x, a, z: np.array([1.0]),
                        reward=lambda x, a, z: np.inf if a == 1 else 0.0,
                        discount=0.9)
    with pytest.raises(m.ModelError, match="not finite"):
        m.reward_table(model, np.array([1.0]))


def test_validate_model_on_grid_passes_for_malware():
    model = m.malware_model(k=0.2, lam=0.5, q=0.9, discount=0.9)
    grid = m.grid_points(10, 2)
    m.validate_model_on_grid(model, grid)


def test_validate_model_on_grid_catches_off_grid_breakage():
    # stochastic at lattice points of a coarse grid, broken elsewhere
    def kernel(x, a, z):
        if abs(z[0] * 2 - round(z[0] * 2)) < 1e-12:
            return np.array([1.0, 0.0])
        return np.array([0.7, 0.5])

    model = m.GameModel(n_types=2, n_actions=1, kernel=kernel,
                        reward=lambda x, a, z: 0.0, discount=0.9)
    grid = m.grid_points(2, 2)
    with pytest.raises(m.ModelError):
        m.validate_model_on_grid(model, grid)


def test_check_mean_field_rejects_bad_vectors():
    with pytest.raises(ValueError):
        m.check_mean_field([0.5, 0.6])
    with pytest.raises(ValueError):
        m.check_mean_field([[0.5, 0.5]])
    with pytest.raises(ValueError):
        m.check_mean_field([1.2, -0.2])
    z = m.check_mean_field([0.25, 0.75])
    assert z.dtype == np.float64


def test_check_prescription_rejects_bad_rows():
    with pytest.raises(ValueError, match="row 1"):
        m.check_prescription([[1.0, 0.0], [0.3, 0.3]])
    with pytest.raises(ValueError):
        m.check_prescription([[0.5, 0.5]], n_types=2)


def test_max_abs_reward():
    model = m.malware_model(k=0.2, lam=0.5, q=0.9, discount=0.9)
    grid = m.grid_points(10, 2)
    # worst case: infected and repairing at z = (0, 1)
    assert m.max_abs_reward(model, grid) == pytest.approx(1.7)
