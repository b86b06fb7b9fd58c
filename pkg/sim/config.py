# FILE: sim/config.py
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields, replace
from typing import Any

from core.errors import ConfigError
from core.flow.state import ControlMode
from core.ddp.types import DdpOptions, HessianMode, default_schedule
from utils.numeric import as_float, as_floats, as_int, as_ints, as_str, is_integral_ratio


def _f(d: dict[str, Any], key: str, default: Any) -> Any:
    return d[key] if key in d else default


def _section(d: Any, name: str, cls: type) -> dict[str, Any]:
    if d is None:
        return {}
    if not isinstance(d, dict):
        raise ConfigError(f"expected an object, got {type(d).__name__}", field=name)
    allowed = {f.name for f in fields(cls)}
    for k in d:
        if k not in allowed:
            raise ConfigError(f"unknown key (allowed: {', '.join(sorted(allowed))})",
                              field=f"{name}.{k}" if name else k)
    return d


@dataclass(frozen=True)
class ScenarioConfig:
    mode: str = "velocity"
    n_r: int = 4
    t_f: float = 8.0
    dt: float = 0.01
    initial_mean: tuple[float, float] = (1.0, 1.0)
    initial_cov_scale: float = 0.025
    target_mean: tuple[float, float] = (-1.0, -1.0)
    target_var: float = 0.0
    rotor_ring_radius: float = 0.2
    eps: float = 0.0
    r_min: float = 1e-4

    @property
    def control_mode(self) -> ControlMode:
        return ControlMode.parse(self.mode)

    @property
    def steps(self) -> int:
        return int(round(self.t_f / self.dt))

    @property
    def horizon(self) -> int:
        """Number of stored states, t_f/dt + 1."""
        return self.steps + 1

    def to_dict(self) -> dict[str, Any]:
        return {
            "mode": self.mode,
            "n_r": int(self.n_r),
            "t_f": float(self.t_f),
            "dt": float(self.dt),
            "initial_mean": [float(v) for v in self.initial_mean],
            "initial_cov_scale": float(self.initial_cov_scale),
            "target_mean": [float(v) for v in self.target_mean],
            "target_var": float(self.target_var),
            "rotor_ring_radius": float(self.rotor_ring_radius),
            "eps": float(self.eps),
            "r_min": float(self.r_min),
        }

    @staticmethod
    def from_dict(d: dict[str, Any]) -> "ScenarioConfig":
        d = _section(d, "scenario", ScenarioConfig)
        base = ScenarioConfig()
        mode = as_str(_f(d, "mode", base.mode), "scenario.mode", ("velocity", "torque"))
        cfg = ScenarioConfig(
            mode=mode,
            n_r=as_int(_f(d, "n_r", base.n_r), "scenario.n_r", lo=1),
            t_f=as_float(_f(d, "t_f", base.t_f), "scenario.t_f", lo=0.0, lo_open=True),
            dt=as_float(_f(d, "dt", base.dt), "scenario.dt", lo=0.0, lo_open=True),
            initial_mean=as_floats(_f(d, "initial_mean", list(base.initial_mean)), "scenario.initial_mean", 2),
            initial_cov_scale=as_float(_f(d, "initial_cov_scale", base.initial_cov_scale),
                                       "scenario.initial_cov_scale", lo=0.0),
            target_mean=as_floats(_f(d, "target_mean", list(base.target_mean)), "scenario.target_mean", 2),
            target_var=as_float(_f(d, "target_var", base.target_var), "scenario.target_var", lo=0.0),
            rotor_ring_radius=as_float(_f(d, "rotor_ring_radius", base.rotor_ring_radius),
                                       "scenario.rotor_ring_radius", lo=0.0, lo_open=True),
            eps=as_float(_f(d, "eps", base.eps), "scenario.eps", lo=0.0),
            r_min=as_float(_f(d, "r_min", base.r_min), "scenario.r_min", lo=0.0, lo_open=True),
        )
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if not is_integral_ratio(self.t_f, self.dt):
            raise ConfigError(f"t_f/dt = {self.t_f / self.dt} is not an integer", field="scenario.t_f")
        if self.control_mode is ControlMode.TORQUE and self.n_r < 2:
            raise ConfigError("torque mode needs at least two rotors to generate translational motion",
                              field="scenario.n_r")
        if self.n_r < 1:
            raise ConfigError("need at least one rotor", field="scenario.n_r")


@dataclass(frozen=True)
class GpcConfig:
    degree: int = 3
    quad_points: int = 8

    def to_dict(self) -> dict[str, Any]:
        return {"degree": int(self.degree), "quad_points": int(self.quad_points)}

    @staticmethod
    def from_dict(d: dict[str, Any]) -> "GpcConfig":
        d = _section(d, "gpc", GpcConfig)
        return GpcConfig(
            degree=as_int(_f(d, "degree", 3), "gpc.degree", lo=1, hi=12),
            quad_points=as_int(_f(d, "quad_points", 8), "gpc.quad_points", lo=1, hi=64),
        )


@dataclass(frozen=True)
class WeightsConfig:
    """Optional diagonal overrides, given before the dt scaling."""
    alpha: float = 1.0 / 3.0
    S: tuple[float, ...] | None = None
    S_H: tuple[float, ...] | None = None
    R: tuple[float, ...] | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "alpha": float(self.alpha),
            "S": None if self.S is None else list(self.S),
            "S_H": None if self.S_H is None else list(self.S_H),
            "R": None if self.R is None else list(self.R),
        }

    @staticmethod
    def from_dict(d: dict[str, Any]) -> "WeightsConfig":
        d = _section(d, "weights", WeightsConfig)

        def diag(key: str, length: int | None) -> tuple[float, ...] | None:
            v = _f(d, key, None)
            if v is None:
                return None
            vals = as_floats(v, f"weights.{key}", length)
            if any(x < 0.0 for x in vals):
                raise ConfigError("weights must be >= 0", field=f"weights.{key}")
            return vals

        return WeightsConfig(
            alpha=as_float(_f(d, "alpha", 1.0 / 3.0), "weights.alpha", lo=0.0, lo_open=True),
            S=diag("S", 4),
            S_H=diag("S_H", 4),
            R=diag("R", None),
        )


@dataclass(frozen=True)
class DdpConfig:
    max_iters: int = 500
    cost_tol: float = 1e-6
    reg_init: float = 1e-6
    reg_min: float = 1e-9
    reg_max: float = 1e9
    reg_factor: float = 10.0
    min_stepsize_exponent: int = 10
    hessian_mode: str = "gauss_newton"

    def to_dict(self) -> dict[str, Any]:
        return {
            "max_iters": int(self.max_iters),
            "cost_tol": float(self.cost_tol),
            "reg_init": float(self.reg_init),
            "reg_min": float(self.reg_min),
            "reg_max": float(self.reg_max),
            "reg_factor": float(self.reg_factor),
            "min_stepsize_exponent": int(self.min_stepsize_exponent),
            "hessian_mode": self.hessian_mode,
        }

    @staticmethod
    def from_dict(d: dict[str, Any]) -> "DdpConfig":
        d = _section(d, "ddp", DdpConfig)
        mode = as_str(_f(d, "hessian_mode", "gauss_newton"), "ddp.hessian_mode")
        try:
            mode = HessianMode.parse(mode).value
        except ValueError as e:
            raise ConfigError(str(e), field="ddp.hessian_mode") from None
        cfg = DdpConfig(
            max_iters=as_int(_f(d, "max_iters", 500), "ddp.max_iters", lo=1),
            cost_tol=as_float(_f(d, "cost_tol", 1e-6), "ddp.cost_tol", lo=0.0, lo_open=True),
            reg_init=as_float(_f(d, "reg_init", 1e-6), "ddp.reg_init", lo=0.0, lo_open=True),
            reg_min=as_float(_f(d, "reg_min", 1e-9), "ddp.reg_min", lo=0.0, lo_open=True),
            reg_max=as_float(_f(d, "reg_max", 1e9), "ddp.reg_max", lo=0.0, lo_open=True),
            reg_factor=as_float(_f(d, "reg_factor", 10.0), "ddp.reg_factor", lo=1.0, lo_open=True),
            min_stepsize_exponent=as_int(_f(d, "min_stepsize_exponent", 10), "ddp.min_stepsize_exponent",
                                         lo=0, hi=60),
            hessian_mode=mode,
        )
        if not (cfg.reg_min <= cfg.reg_init <= cfg.reg_max):
            raise ConfigError("need reg_min <= reg_init <= reg_max", field="ddp.reg_init")
        return cfg

    def options(self) -> DdpOptions:
        return DdpOptions(
            max_iters=self.max_iters,
            cost_tol=self.cost_tol,
            reg_init=self.reg_init,
            reg_min=self.reg_min,
            reg_max=self.reg_max,
            reg_factor=self.reg_factor,
            stepsize_schedule=default_schedule(self.min_stepsize_exponent),
            hessian_mode=HessianMode.parse(self.hessian_mode),
        )


@dataclass(frozen=True)
class MonteCarloConfig:
    n_particles: int = 10000
    snapshot_stride: int = 50
    histogram_bins: int = 64

    def to_dict(self) -> dict[str, Any]:
        return {"n_particles": int(self.n_particles), "snapshot_stride": int(self.snapshot_stride),
                "histogram_bins": int(self.histogram_bins)}

    @staticmethod
    def from_dict(d: dict[str, Any]) -> "MonteCarloConfig":
        d = _section(d, "monte_carlo", MonteCarloConfig)
        return MonteCarloConfig(
            n_particles=as_int(_f(d, "n_particles", 10000), "monte_carlo.n_particles", lo=1),
            snapshot_stride=as_int(_f(d, "snapshot_stride", 50), "monte_carlo.snapshot_stride", lo=0),
            histogram_bins=as_int(_f(d, "histogram_bins", 64), "monte_carlo.histogram_bins", lo=2),
        )


@dataclass(frozen=True)
class FtleConfig:
    t0: float = 1.5
    tau: float = 1.5
    resolution: tuple[int, int] = (250, 250)
    domain: tuple[float, float, float, float] = (-2.0, 2.0, -2.0, 2.0)
    dt: float = 0.01
    bbox_scale: float = 4.0
    ridge_radius: float = 0.25
    eigenvectors: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "t0": float(self.t0),
            "tau": float(self.tau),
            "resolution": [int(v) for v in self.resolution],
            "domain": [float(v) for v in self.domain],
            "dt": float(self.dt),
            "bbox_scale": float(self.bbox_scale),
            "ridge_radius": float(self.ridge_radius),
            "eigenvectors": bool(self.eigenvectors),
        }

    @staticmethod
    def from_dict(d: dict[str, Any]) -> "FtleConfig":
        d = _section(d, "ftle", FtleConfig)
        res = as_ints(_f(d, "resolution", [250, 250]), "ftle.resolution", lo=3)
        if len(res) != 2:
            raise ConfigError("expected [n_x, n_y]", field="ftle.resolution")
        dom = as_floats(_f(d, "domain", [-2.0, 2.0, -2.0, 2.0]), "ftle.domain", 4)
        if not (dom[1] > dom[0] and dom[3] > dom[2]):
            raise ConfigError("domain must be [x_min, x_max, y_min, y_max] with positive extent",
                              field="ftle.domain")
        tau = as_float(_f(d, "tau", 1.5), "ftle.tau")
        if tau == 0.0:
            raise ConfigError("tau must be nonzero", field="ftle.tau")
        eig = _f(d, "eigenvectors", False)
        if not isinstance(eig, bool):
            raise ConfigError(f"expected true or false, got {eig!r}", field="ftle.eigenvectors")
        return FtleConfig(
            t0=as_float(_f(d, "t0", 1.5), "ftle.t0", lo=0.0),
            tau=tau,
            resolution=(res[0], res[1]),
            domain=(dom[0], dom[1], dom[2], dom[3]),
            dt=as_float(_f(d, "dt", 0.01), "ftle.dt", lo=0.0, lo_open=True),
            bbox_scale=as_float(_f(d, "bbox_scale", 4.0), "ftle.bbox_scale", lo=1.0),
            ridge_radius=as_float(_f(d, "ridge_radius", 0.25), "ftle.ridge_radius", lo=0.0, lo_open=True),
            eigenvectors=eig,
        )


@dataclass(frozen=True)
class SweepConfig:
    n_r_list: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    t_f_list: tuple[float, ...] = (1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0)
    workers: int = 1

    def to_dict(self) -> dict[str, Any]:
        return {"n_r_list": list(self.n_r_list), "t_f_list": [float(v) for v in self.t_f_list],
                "workers": int(self.workers)}

    @staticmethod
    def from_dict(d: dict[str, Any]) -> "SweepConfig":
        d = _section(d, "sweep", SweepConfig)
        t_f = as_floats(_f(d, "t_f_list", [1.0 * k for k in range(1, 11)]), "sweep.t_f_list")
        if not t_f or any(v <= 0.0 for v in t_f):
            raise ConfigError("final times must be positive", field="sweep.t_f_list")
        return SweepConfig(
            n_r_list=as_ints(_f(d, "n_r_list", [1, 2, 3, 4, 5, 6]), "sweep.n_r_list", lo=1),
            t_f_list=t_f,
            workers=as_int(_f(d, "workers", 1), "sweep.workers", lo=1),
        )


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    gpc: GpcConfig = field(default_factory=GpcConfig)
    weights: WeightsConfig = field(default_factory=WeightsConfig)
    ddp: DdpConfig = field(default_factory=DdpConfig)
    monte_carlo: MonteCarloConfig = field(default_factory=MonteCarloConfig)
    ftle: FtleConfig = field(default_factory=FtleConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    seed: int = 12345

    def to_dict(self) -> dict[str, Any]:
        return {
            "scenario": self.scenario.to_dict(),
            "gpc": self.gpc.to_dict(),
            "weights": self.weights.to_dict(),
            "ddp": self.ddp.to_dict(),
            "monte_carlo": self.monte_carlo.to_dict(),
            "ftle": self.ftle.to_dict(),
            "sweep": self.sweep.to_dict(),
            "seed": int(self.seed),
        }

    @staticmethod
    def from_dict(d: dict[str, Any]) -> "RunConfig":
        d = _section(d, "", RunConfig)
        cfg = RunConfig(
            scenario=ScenarioConfig.from_dict(_f(d, "scenario", None)),
            gpc=GpcConfig.from_dict(_f(d, "gpc", None)),
            weights=WeightsConfig.from_dict(_f(d, "weights", None)),
            ddp=DdpConfig.from_dict(_f(d, "ddp", None)),
            monte_carlo=MonteCarloConfig.from_dict(_f(d, "monte_carlo", None)),
            ftle=FtleConfig.from_dict(_f(d, "ftle", None)),
            sweep=SweepConfig.from_dict(_f(d, "sweep", None)),
            seed=as_int(_f(d, "seed", 12345), "seed", lo=0),
        )
        cfg.validate()
        return cfg

    def validate(self) -> None:
        self.scenario.validate()
        R = self.weights.R
        if R is not None:
            nc = self.scenario.control_mode.control_dim(self.scenario.n_r)
            if len(R) != nc:
                raise ConfigError(f"R needs {nc} entries for {self.scenario.mode} mode with n_r={self.scenario.n_r}",
                                  field="weights.R")
            if any(v <= 0.0 for v in R):
                raise ConfigError("R entries must be > 0", field="weights.R")

    def with_scenario(self, **changes: Any) -> "RunConfig":
        sc = replace(self.scenario, **changes)
        sc.validate()
        return replace(self, scenario=sc)

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()
