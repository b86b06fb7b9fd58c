# FILE: tests/test_config.py
from __future__ import annotations

import json

import numpy as np
import pytest

from app.config_store import key_line, load_config_dict, load_json, save_json_atomic
from core.errors import ConfigError, MissingArtifact
from sim.config import RunConfig
from sim.scenario import build_scenario, ring_positions, scenario_weights


def test_defaults_round_trip_and_hash_is_stable():
    cfg = RunConfig()
    again = RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg
    assert again.config_hash() == cfg.config_hash()
    assert len(cfg.config_hash()) == 64
    assert cfg.with_scenario(n_r=3).config_hash() != cfg.config_hash()


def test_missing_sections_take_defaults():
    cfg = RunConfig.from_dict({"scenario": {"n_r": 2}})
    assert cfg.scenario.n_r == 2
    assert cfg.scenario.t_f == 8.0
    assert cfg.scenario.horizon == 801
    assert cfg.gpc.degree == 3


def test_unknown_key_names_its_field():
    with pytest.raises(ConfigError) as exc:
        RunConfig.from_dict({"scenario": {"bogus": 1}})
    assert exc.value.field == "scenario.bogus"
    with pytest.raises(ConfigError) as exc:
        RunConfig.from_dict({"extras": {}})
    assert exc.value.field == "extras"


def test_final_time_must_be_a_whole_number_of_steps():
    with pytest.raises(ConfigError) as exc:
        RunConfig.from_dict({"scenario": {"t_f": 1.0, "dt": 0.3}})
    assert exc.value.field == "scenario.t_f"


def test_torque_mode_with_one_rotor_is_rejected():
    with pytest.raises(ConfigError, match="at least two rotors") as exc:
        RunConfig.from_dict({"scenario": {"mode": "torque", "n_r": 1}})
    assert exc.value.field == "scenario.n_r"


@pytest.mark.parametrize("section,key,value", [
    ("scenario", "dt", "0.01"),
    ("scenario", "n_r", True),
    ("scenario", "mode", "magnetic"),
    ("gpc", "degree", 2.5),
    ("ftle", "tau", 0.0),
    ("ftle", "resolution", [2, 10]),
    ("ddp", "hessian_mode", "newton"),
])
def test_bad_values(section, key, value):
    with pytest.raises(ConfigError) as exc:
        RunConfig.from_dict({section: {key: value}})
    assert exc.value.field.startswith(f"{section}.{key}")


def test_control_weight_override_must_match_control_size():
    with pytest.raises(ConfigError) as exc:
        RunConfig.from_dict({"scenario": {"n_r": 2}, "weights": {"R": [1.0, 1.0]}})
    assert exc.value.field == "weights.R"
    cfg = RunConfig.from_dict({"scenario": {"n_r": 1, "dt": 0.1, "t_f": 1.0}, "weights": {"R": [2.0, 1.0, 1.0]}})
    w = scenario_weights(cfg)
    np.testing.assert_allclose(np.diag(w.R), [0.2, 0.1, 0.1])
    np.testing.assert_allclose(np.diag(w.S_H), 100.0)


def test_key_line_finds_nested_keys():
    text = '{\n  "scenario": {\n    "n_r": 2,\n    "bogus": 1\n  },\n  "bogus": 3\n}\n'
    assert key_line(text, "scenario.bogus") == 4
    assert key_line(text, "scenario.n_r") == 3
    assert key_line(text, "missing") is None
    assert key_line(text, None) is None


def test_json_syntax_errors_carry_the_line(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{\n  "seed": 1,\n  "gpc": {,}\n}\n', encoding="utf-8")
    with pytest.raises(ConfigError) as exc:
        load_json(p)
    assert exc.value.line == 3
    with pytest.raises(MissingArtifact):
        load_json(tmp_path / "absent.json")


def test_atomic_save_then_load(tmp_path):
    p = tmp_path / "out" / "config.json"
    data = RunConfig().to_dict()
    save_json_atomic(p, data)
    assert not (tmp_path / "out" / "config.json.tmp").exists()
    loaded, text = load_config_dict(p)
    assert RunConfig.from_dict(loaded) == RunConfig()
    assert key_line(text, "scenario.n_r") is not None


def test_ring_positions_go_counterclockwise_from_the_right():
    pos = ring_positions(4, 1.0, center=(0.5, -0.5))
    np.testing.assert_allclose(pos, [[1.5, -0.5], [0.5, 0.5], [-0.5, -0.5], [0.5, -1.5]], atol=1e-15)


def test_scenario_places_rotors_around_the_target(tiny_dict):
    cfg = RunConfig.from_dict(tiny_dict(target_mean=[-1.0, -1.0], rotor_ring_radius=0.2))
    sc = build_scenario(cfg)
    np.testing.assert_allclose(sc.rotor_start, ring_positions(2, 0.2, (-1.0, -1.0)))
    assert sc.horizon == 11
    assert sc.problem.control_dim == 6
    means, covs = sc.particle_moments(sc.X0.flat()[None, :])
    np.testing.assert_allclose(means[0], [1.0, 1.0])
    np.testing.assert_allclose(covs[0], 0.0025 * np.eye(2), atol=1e-15)
