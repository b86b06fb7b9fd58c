# FILE: tests/conftest.py
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Callable

import numpy as np
import pytest

from sim.config import RunConfig


def _central_jacobian(f: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    f0 = np.asarray(f(x), dtype=np.float64)
    J = np.empty(f0.shape + x.shape, dtype=np.float64)
    for idx in np.ndindex(x.shape):
        e = np.zeros_like(x)
        e[idx] = h
        J[(...,) + idx] = (np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2.0 * h)
    return J


@pytest.fixture
def fd_jacobian() -> Callable[..., np.ndarray]:
    """Central differences: result[..., j] = d f(...) / d x_j."""
    return _central_jacobian


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


def tiny_config_dict(**scenario: Any) -> dict[str, Any]:
    """A scenario small enough for end-to-end CLI runs; target equals the start."""
    sc = {
        "mode": "velocity",
        "n_r": 2,
        "t_f": 0.2,
        "dt": 0.02,
        "initial_mean": [1.0, 1.0],
        "initial_cov_scale": 0.0025,
        "target_mean": [1.0, 1.0],
        "target_var": 0.0025,
    }
    sc.update(scenario)
    return {
        "scenario": sc,
        "gpc": {"degree": 2, "quad_points": 4},
        "ddp": {"max_iters": 20, "cost_tol": 1e-6},
        "monte_carlo": {"n_particles": 50, "snapshot_stride": 5, "histogram_bins": 8},
        "ftle": {"t0": 0.1, "tau": 0.1, "resolution": [5, 5], "domain": [0.5, 1.5, 0.5, 1.5], "dt": 0.01},
        "sweep": {"n_r_list": [2], "t_f_list": [0.2], "workers": 1},
        "seed": 7,
    }


@pytest.fixture
def tiny_config() -> RunConfig:
    return RunConfig.from_dict(tiny_config_dict())


@pytest.fixture
def write_config(tmp_path: Path) -> Callable[..., Path]:
    def _write(data: dict[str, Any], name: str = "config.json") -> Path:
        p = tmp_path / name
        p.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
        return p

    return _write


@pytest.fixture
def tiny_dict() -> Callable[..., dict[str, Any]]:
    return tiny_config_dict
