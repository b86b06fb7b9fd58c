# FILE: tests/test_cli.py
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from app.artifacts import read_controls, read_ftle_grid
from app.cli import EXIT_CONFIG, EXIT_MISSING, EXIT_NUMERICAL, EXIT_OK, build_parser, resolve_config, run_cli
from core.errors import ConfigError


@pytest.fixture
def solved_run(tmp_path, write_config, tiny_dict, monkeypatch) -> Path:
    monkeypatch.chdir(tmp_path)
    cfg = write_config(tiny_dict())
    out = tmp_path / "run"
    assert run_cli(["-q", "optimize", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    return out


def _manifest(run: Path) -> dict:
    return json.loads((run / "manifest.json").read_text(encoding="utf-8"))


def test_optimize_writes_its_artifacts(solved_run):
    for name in ("config.json", "trajectory.csv", "controls.csv", "moments.csv", "policy.npz",
                 "cost_summary.json", "convergence.json", "manifest.json"):
        assert (solved_run / name).is_file(), name
    man = _manifest(solved_run)
    assert man["commands"] == ["optimize"]
    assert man["seed"] == 7
    assert "controls.csv" in man["artifacts"]
    assert read_controls(solved_run / "controls.csv").shape == (10, 6)
    conv = json.loads((solved_run / "convergence.json").read_text(encoding="utf-8"))
    assert conv["converged"]
    summary = json.loads((solved_run / "cost_summary.json").read_text(encoding="utf-8"))
    np.testing.assert_allclose(summary["final_moments"], [1.0, 1.0, 0.0025, 0.0025], rtol=1e-9)


def test_validate_then_ftle_extend_the_manifest(solved_run):
    assert run_cli(["-q", "validate", "--run", str(solved_run), "--n", "40", "--seed", "3"]) == EXIT_OK
    report = json.loads((solved_run / "validation.json").read_text(encoding="utf-8"))
    assert report["n_particles"] == 40
    assert report["seed"] == 3
    assert report["variance_defined"]
    # zero controls leave every particle where it started
    assert report["max_mean_gap_first_half"] < 0.05
    assert (solved_run / "density_histogram.csv").is_file()

    assert run_cli(["-q", "ftle", "--run", str(solved_run), "--eigenvectors"]) == EXIT_OK
    header, sigma, flags = read_ftle_grid(solved_run / "ftle_forward.ftle")
    assert header["resolution"] == (5, 5)
    assert header["tau"] == pytest.approx(0.1)
    np.testing.assert_allclose(sigma, 0.0, atol=1e-10)
    _, back, _ = read_ftle_grid(solved_run / "ftle_backward.ftle")
    np.testing.assert_allclose(back, 0.0, atol=1e-10)
    man = _manifest(solved_run)
    assert man["commands"] == ["optimize", "validate", "ftle"]
    assert {"ftle_forward.csv", "density_contours.csv", "mean_velocity.csv"} <= set(man["artifacts"])


def test_simulate_replays_stored_controls(solved_run, tmp_path, write_config, tiny_dict):
    cfg = write_config(tiny_dict(), name="again.json")
    out = tmp_path / "sim"
    code = run_cli(["-q", "simulate", "--config", str(cfg), "--controls", str(solved_run / "controls.csv"),
                    "--out", str(out), "--mc", "20"])
    assert code == EXIT_OK
    summary = json.loads((out / "cost_summary.json").read_text(encoding="utf-8"))
    assert summary["gpc_cost"] == pytest.approx(0.0, abs=1e-12)
    assert "true_cost" in summary
    assert (out / "validation.json").is_file()


def test_simulate_rejects_mismatched_control_table(solved_run, tmp_path, write_config, tiny_dict):
    cfg = write_config(tiny_dict(n_r=3), name="three.json")
    code = run_cli(["-q", "simulate", "--config", str(cfg), "--controls", str(solved_run / "controls.csv"),
                    "--out", str(tmp_path / "bad")])
    assert code == EXIT_NUMERICAL


def test_sweep_writes_a_cost_table(tmp_path, write_config, tiny_dict, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = write_config(tiny_dict())
    out = tmp_path / "sweep"
    assert run_cli(["-q", "sweep", "--config", str(cfg), "--out", str(out), "--n", "30"]) == EXIT_OK
    assert (out / "cost_table.csv").is_file()
    assert not (out / "sweep_failures.csv").exists()
    assert _manifest(out)["commands"] == ["sweep"]


def test_particle_starting_on_a_rotor_is_a_numerical_failure(tmp_path, write_config, tiny_dict):
    cfg = write_config(tiny_dict(initial_mean=[-0.8, -1.0], initial_cov_scale=0.0,
                                 target_mean=[-1.0, -1.0], rotor_ring_radius=0.2))
    assert run_cli(["-q", "optimize", "--config", str(cfg), "--out", str(tmp_path / "r")]) == EXIT_NUMERICAL


@pytest.mark.parametrize("extra", [
    ["--t-f", "0.21"],
    ["--mode", "torque", "--n-r", "1"],
    ["--hessian-mode", "newton"],
    ["--n-r", "two"],
])
def test_configuration_errors_exit_with_2(tmp_path, write_config, tiny_dict, extra):
    cfg = write_config(tiny_dict())
    assert run_cli(["-q", "optimize", "--config", str(cfg), "--out", str(tmp_path / "r"), *extra]) == EXIT_CONFIG


def test_unknown_key_is_located_in_the_file(write_config, tiny_dict, tmp_path):
    data = tiny_dict()
    data["scenario"]["bogus"] = 1
    cfg = write_config(data)
    assert run_cli(["-q", "optimize", "--config", str(cfg), "--out", str(tmp_path / "r")]) == EXIT_CONFIG

    args = build_parser().parse_args(["optimize", "--config", str(cfg)])
    with pytest.raises(ConfigError) as exc:
        resolve_config(args)
    lines = cfg.read_text(encoding="utf-8").splitlines()
    assert exc.value.field == "scenario.bogus"
    assert '"bogus"' in lines[exc.value.line - 1]


def test_flags_override_the_file(write_config, tiny_dict):
    cfg = write_config(tiny_dict())
    args = build_parser().parse_args(["sweep", "--config", str(cfg), "--n-r", "3", "--initial-mean", "0.5", "0.25",
                                      "--t-f-list", "0.2", "0.4", "--seed", "99"])
    rc = resolve_config(args)
    assert rc.scenario.n_r == 3
    assert rc.scenario.initial_mean == (0.5, 0.25)
    assert rc.sweep.t_f_list == (0.2, 0.4)
    assert rc.seed == 99
    assert rc.gpc.degree == 2


def test_missing_run_artifacts_exit_with_4(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert run_cli(["-q", "validate", "--run", str(empty)]) == EXIT_MISSING
    assert run_cli(["-q", "ftle", "--run", str(empty)]) == EXIT_MISSING


def test_ftle_arguments_are_checked(solved_run):
    assert run_cli(["-q", "ftle", "--run", str(solved_run), "--resolution", "2", "5"]) == EXIT_CONFIG
    assert run_cli(["-q", "ftle", "--run", str(solved_run), "--tau", "0"]) == EXIT_CONFIG
    assert run_cli(["-q", "ftle", "--run", str(solved_run), "--t0", "0.15", "--tau", "0.1"]) == EXIT_NUMERICAL


def test_repeated_runs_write_identical_tables(tmp_path, write_config, tiny_dict):
    cfg = write_config(tiny_dict(target_mean=[0.9, 1.1]))
    codes, runs = [], []
    for name in ("a", "b"):
        run = tmp_path / name
        codes.append(run_cli(["-q", "optimize", "--config", str(cfg), "--out", str(run)]))
        assert run_cli(["-q", "validate", "--run", str(run), "--n", "60", "--seed", "5"]) == EXIT_OK
        runs.append(run)
    assert codes[0] == codes[1]
    assert codes[0] in (EXIT_OK, EXIT_NUMERICAL)

    tables = sorted(p.name for p in runs[0].glob("*.csv"))
    assert {"trajectory.csv", "controls.csv", "moments.csv", "ensemble.csv"} <= set(tables)
    assert tables == sorted(p.name for p in runs[1].glob("*.csv"))
    for name in tables:
        assert (runs[0] / name).read_bytes() == (runs[1] / name).read_bytes(), name
    conv = [json.loads((r / "convergence.json").read_text(encoding="utf-8")) for r in runs]
    assert len(conv[0]["cost_history"]) >= 2
    assert conv[0]["cost_history"] == conv[1]["cost_history"]
    assert (runs[0] / "policy.npz").is_file()
