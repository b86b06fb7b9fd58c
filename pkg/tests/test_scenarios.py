# FILE: tests/test_scenarios.py
from __future__ import annotations

import numpy as np
import pytest

from sim.config import RunConfig
from sim.runner import OptimizeOutcome, run_ftle, run_optimize, run_sweep, run_validate

pytestmark = pytest.mark.slow

TARGET = np.array([-1.0, -1.0])


def _config(**scenario) -> RunConfig:
    sc = {"n_r": 2, "t_f": 2.0, "dt": 0.02}
    sc.update(scenario)
    return RunConfig.from_dict({
        "scenario": sc,
        "gpc": {"degree": 2, "quad_points": 4},
        "ddp": {"max_iters": 60, "cost_tol": 1e-6},
        "monte_carlo": {"n_particles": 400, "snapshot_stride": 10},
        "seed": 1,
    })


@pytest.fixture(scope="module")
def velocity_optimum() -> tuple[RunConfig, OptimizeOutcome]:
    # defaults: velocity control, four rotors, t_f 8, dt 0.01, degree-3 expansion
    cfg = RunConfig.from_dict({"seed": 2024})
    return cfg, run_optimize(cfg)


@pytest.mark.parametrize("mode,n_r", [("velocity", 2), ("torque", 3)])
def test_optimized_mean_moves_toward_the_target(mode, n_r):
    cfg = _config(mode=mode, n_r=n_r)
    out = run_optimize(cfg)
    hist = out.result.cost_history
    assert hist[-1] < hist[0]
    start = np.asarray(cfg.scenario.initial_mean)
    target = np.asarray(cfg.scenario.target_mean)
    end = out.moments[-1, :2]
    assert np.linalg.norm(end - target) < np.linalg.norm(start - target)


def test_monte_carlo_follows_the_expansion_early_on():
    cfg = _config()
    out = run_optimize(cfg)
    val = run_validate(cfg, out.controls, scenario=out.scenario)
    assert val.max_mean_gap_first_half < 0.05
    assert np.isfinite(val.true_cost)


def test_four_velocity_rotors_deliver_the_cloud(velocity_optimum):
    cfg, out = velocity_optimum
    assert out.result.report.converged
    hist = np.asarray(out.result.cost_history)
    assert np.all(np.diff(hist) < 0.0)
    end = out.moments[-1]
    assert np.all(np.abs(end[:2] - TARGET) <= 0.05)
    assert end[2] < cfg.scenario.initial_cov_scale
    assert end[3] < cfg.scenario.initial_cov_scale

    val = run_validate(cfg, out.controls, n_particles=10_000, scenario=out.scenario)
    assert val.max_mean_gap_first_half <= 0.05


def test_forward_ridge_borders_the_two_sigma_contour(velocity_optimum):
    cfg, out = velocity_optimum
    ftle = run_ftle(cfg, out.controls, t0=1.5, tau=1.5, resolution=(64, 64), scenario=out.scenario)
    assert np.isfinite(ftle.analysis.forward.sigma[ftle.analysis.forward.flags == 0]).all()
    assert ftle.ridge_adjacent


def test_more_rotors_help_with_diminishing_returns():
    cfg = RunConfig.from_dict({"seed": 2024, "monte_carlo": {"n_particles": 2000}})
    out = run_sweep(cfg, n_r_list=(1, 2, 4, 5), t_f_list=(8.0,))
    assert not out.failures
    c1, c2, c4, c5 = out.table()[0]
    assert c2 < c1
    assert (c4 - c5) / c4 < (c1 - c2) / c1


@pytest.mark.parametrize("n_r", [2, 3, 4, 5])
def test_torque_rotors_transport_the_mean(n_r):
    cfg = RunConfig.from_dict({"scenario": {"mode": "torque", "n_r": n_r, "t_f": 10.0}, "seed": 2024})
    out = run_optimize(cfg)
    assert out.result.report.converged
    assert np.all(np.abs(out.moments[-1, :2] - TARGET) < 0.1)


def test_sweep_reports_every_cell_in_order():
    cfg = _config()
    out = run_sweep(cfg, n_r_list=(1, 2), t_f_list=(1.0, 2.0))
    table = out.table()
    assert table.shape == (2, 2)
    assert not out.failures
    assert np.all(np.isfinite(table))
