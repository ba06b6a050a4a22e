import csv
import json

import numpy as np
import pytest

import mfgsolve as m
from mfgsolve import serialize
from mfgsolve.cli import main


def write_config(path, **overrides):
    cfg = {
        "family": "malware",
        "params": {"k": 0.2, "lambda": 0.5, "q": 0.9},
        "discount": 0.9,
        "horizon": "infinite",
        "grid_resolution": 10,
    }
    cfg.update(overrides)
    path.write_text(json.dumps(cfg))
    return cfg


@pytest.fixture(scope="module")
def solved_dir(tmp_path_factory):
    base = tmp_path_factory.mktemp("solved")
    config = base / "model.json"
    write_config(config)
    out = base / "out"
    assert main(["solve", str(config), "-o", str(out)]) == 0
    return config, out


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_solve_writes_all_outputs(solved_dir):
    _, out = solved_dir
    for name in ("theta.csv", "value.csv", "report.json", "plotdata.csv"):
        assert (out / name).exists()
    report = json.loads((out / "report.json").read_text())
    assert report["sweeps"] > 1
    assert report["final_sup_change"] <= 1e-8
    assert report["diagnostics"]["non_converged"] == 0
    assert report["monotone_in_z0"] is True
    assert len(report["manifest"]["config_hash"]) == 64


def test_plotdata_row_count_and_sorting(tmp_path):
    config = tmp_path / "model.json"
    write_config(config, grid_resolution=50)
    out = tmp_path / "out"
    assert main(["solve", str(config), "-o", str(out)]) == 0
    rows = read_rows(out / "plotdata.csv")
    assert rows[0] == ["z0", "gamma1_type0", "gamma1_type1",
                       "value_type0", "value_type1"]
    assert len(rows) == 1 + 51
    z0 = [float(r[0]) for r in rows[1:]]
    assert z0 == sorted(z0)


def test_theta_csv_t1_shows_pure_inaction(tmp_path):
    config = tmp_path / "model.json"
    write_config(config, horizon=1, grid_resolution=4)
    out = tmp_path / "out"
    assert main(["solve", str(config), "-o", str(out)]) == 0
    rows = read_rows(out / "theta.csv")
    for row in rows[1:]:
        prob = float(row[-1])
        assert prob == (1.0 if row[-2] == "0" else 0.0)


def test_roundtrip_theta_and_value_exact(solved_dir):
    config, out = solved_dir
    cfg = m.load_config(config)
    solution = m.solve_infinite(cfg.model, cfg.grid, cfg.fp_options,
                                sup_tol=cfg.sup_tol)
    theta = serialize.read_theta_csv(out / "theta.csv", cfg.grid, 2, 2)
    values = serialize.read_value_csv(out / "value.csv", cfg.grid, 2)
    assert np.array_equal(theta.tables, solution.theta.tables)
    assert np.array_equal(values, solution.value)
    assert theta.stationary


def test_roundtrip_finite_stages(tmp_path):
    config = tmp_path / "model.json"
    write_config(config, horizon=2, grid_resolution=4)
    out = tmp_path / "out"
    assert main(["solve", str(config), "-o", str(out)]) == 0
    cfg = m.load_config(config)
    solution = m.solve_finite(cfg.model, cfg.grid, cfg.fp_options)
    theta = serialize.read_theta_csv(out / "theta.csv", cfg.grid, 2, 2)
    values = serialize.read_value_csv(out / "value.csv", cfg.grid, 2)
    assert not theta.stationary
    assert np.array_equal(theta.tables, solution.theta.tables)
    assert values.shape == (3, cfg.grid.n_points, 2)
    assert np.array_equal(values, solution.values)


def test_verify_passes_on_solved_model(solved_dir):
    config, out = solved_dir
    assert main(["verify", str(config), "-s", str(out)]) == 0
    report = json.loads((out / "verify_report.json").read_text())
    assert report["passed"] is True
    assert report["max_gap"] <= report["gap_tol"]
    assert len(report["gaps"]) == 11


def test_verify_fails_on_tampered_theta(solved_dir, tmp_path):
    config, out = solved_dir
    tampered = tmp_path / "tampered"
    tampered.mkdir()
    (tampered / "value.csv").write_text((out / "value.csv").read_text())
    rows = read_rows(out / "theta.csv")
    with open(tampered / "theta.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(rows[0])
        for row in rows[1:]:
            row[-1] = "1" if row[-2] == "1" else "0"  # repair everywhere
            writer.writerow(row)
    assert main(["verify", str(config), "-s", str(tampered)]) == 1
    report = json.loads((tampered / "verify_report.json").read_text())
    assert report["passed"] is False
    assert report["max_gap"] > 1e-2


def test_verify_gap_tol_flag(solved_dir):
    config, out = solved_dir
    # the reference gap is slightly negative (truncation slack), so only an
    # impossible tolerance below it can force a failure exit
    assert main(["verify", str(config), "-s", str(out),
                 "--gap-tol=-1.0"]) == 1
    assert main(["verify", str(config), "-s", str(out),
                 "--gap-tol", "0.5"]) == 0


def test_verify_missing_solution_dir_errors(solved_dir, tmp_path):
    config, _ = solved_dir
    assert main(["verify", str(config), "-s", str(tmp_path / "nowhere")]) == 1


def test_single_action_model_verifies_with_zero_gap(tmp_path):
    kern = np.zeros((2, 2, 1, 2))
    kern[0, 0, 0] = [1.0, 0.0]
    kern[0, 1, 0] = [0.0, 1.0]
    kern[1, 0, 0] = [1.0, 0.0]
    kern[1, 1, 0] = [0.0, 1.0]
    cfg = {
        "family": "tabular_affine",
        "params": {
            "kernels": kern.tolist(),
            "reward_base": [[0.0], [-1.0]],
            "reward_mix": [[[0.0, -0.5]], [[0.0, -0.5]]],
        },
        "discount": 0.9,
        "horizon": 6,
        "grid_resolution": 5,
    }
    config = tmp_path / "single.json"
    config.write_text(json.dumps(cfg))
    out = tmp_path / "out"
    assert main(["solve", str(config), "-o", str(out)]) == 0
    assert main(["verify", str(config), "-s", str(out),
                 "--gap-tol", "1e-12"]) == 0


def test_simulate_deterministic_bytes(solved_dir, tmp_path):
    config, out = solved_dir
    sim_a = tmp_path / "sim_a"
    sim_b = tmp_path / "sim_b"
    args = ["simulate", str(config), "-s", str(out), "-N", "2000",
            "--seed", "11", "--steps", "20"]
    assert main(args + ["-o", str(sim_a)]) == 0
    assert main(args + ["-o", str(sim_b)]) == 0
    bytes_a = (sim_a / "trajectory.csv").read_bytes()
    bytes_b = (sim_b / "trajectory.csv").read_bytes()
    assert bytes_a == bytes_b
    summary = json.loads((sim_a / "summary.json").read_text())
    assert summary["n_agents"] == 2000
    assert summary["sup_l1_error"] < 0.2


def test_simulate_large_population_tracks_prediction(solved_dir, tmp_path):
    config, out = solved_dir
    sim = tmp_path / "sim"
    assert main(["simulate", str(config), "-s", str(out), "-N", "100000",
                 "--seed", "3", "--steps", "30", "--z1", "1.0", "0.0",
                 "-o", str(sim)]) == 0
    summary = json.loads((sim / "summary.json").read_text())
    # regression bound calibrated on the first run; binomial scale is ~4e-3
    assert summary["sup_l1_error"] <= 0.01


def test_simulate_single_agent_ok(solved_dir, tmp_path):
    config, out = solved_dir
    sim = tmp_path / "sim1"
    assert main(["simulate", str(config), "-s", str(out), "-N", "1",
                 "--seed", "5", "--steps", "10", "-o", str(sim)]) == 0


def test_config_error_exit_code(tmp_path):
    config = tmp_path / "bad.json"
    write_config(config, params={"k": 0.2, "lambda": 0.5, "q": 2.0})
    assert main(["solve", str(config), "-o", str(tmp_path / "out")]) == 2


def test_strict_solve_succeeds_when_all_points_converge(tmp_path):
    config = tmp_path / "model.json"
    write_config(config, grid_resolution=5)
    out = tmp_path / "out"
    assert main(["solve", str(config), "--strict", "-o", str(out)]) == 0


def test_env_thread_override(solved_dir, tmp_path, monkeypatch):
    config, _ = solved_dir
    monkeypatch.setenv("MFGSOLVE_THREADS", "2")
    out = tmp_path / "out_threads"
    assert main(["solve", str(config), "-o", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["manifest"]["options"]["threads"] == 2
