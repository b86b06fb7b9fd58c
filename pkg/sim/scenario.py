# FILE: sim/scenario.py
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from core.cost.moment_cost import CostWeights, MomentCost, MomentTarget, build_scenario_weights
from core.ddp.problem import ModelProblem
from core.errors import ConfigError
from core.flow.state import ControlMode, RotorConfig
from core.flow.systems import RotorSystem
from core.gpc.basis import HermiteBasis, build_basis
from core.gpc.expansion import GpcState, moments, project_gaussian_initial
from core.gpc.galerkin import GpcModel
from core.gpc.quadrature import QuadratureRule, build_quadrature
from sim.config import RunConfig

STOCHASTIC_DIM = 2


def ring_positions(n_r: int, radius: float, center=(0.0, 0.0)) -> np.ndarray:
    """Rotor k at angle 2*pi*k/n_r, counted counterclockwise from the rotor right of center."""
    ang = 2.0 * np.pi * np.arange(n_r) / n_r
    c = np.asarray(center, dtype=np.float64)
    return np.stack([c[0] + radius * np.cos(ang), c[1] + radius * np.sin(ang)], axis=-1)


@dataclass
class Scenario:
    config: RunConfig
    mode: ControlMode
    n_r: int
    dt: float
    horizon: int
    basis: HermiteBasis
    quad: QuadratureRule
    system: RotorSystem
    model: GpcModel
    weights: CostWeights
    target: MomentTarget
    cost: MomentCost
    X0: GpcState
    problem: ModelProblem

    @property
    def rotor_start(self) -> np.ndarray:
        c = self.X0.coeffs
        return np.stack([c[2:2 + self.n_r, 0], c[2 + self.n_r:, 0]], axis=-1)

    def rotor_paths(self, states: np.ndarray) -> np.ndarray:
        """(H, n_r, 2) rotor positions from the zeroth coefficients of flat gPC states."""
        c = np.asarray(states).reshape(states.shape[0], -1, self.basis.size)[:, :, 0]
        return np.stack([c[:, 2:2 + self.n_r], c[:, 2 + self.n_r:]], axis=-1)

    def particle_moments(self, states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(H, 2) means and (H, 2, 2) covariances of the particle rows."""
        n = self.system.n
        per_step = [moments(GpcState.from_flat(s, n), self.basis) for s in np.asarray(states)]
        means = np.array([m.mean[:2] for m in per_step])
        covs = np.array([m.cov[:2, :2] for m in per_step])
        return means, covs

    def moment_vectors(self, states: np.ndarray) -> np.ndarray:
        return np.array([self.cost.output(s) for s in np.asarray(states)])


def scenario_weights(cfg: RunConfig) -> CostWeights:
    sc = cfg.scenario
    base = build_scenario_weights(sc.control_mode, sc.n_r, sc.dt, cfg.weights.alpha)
    w = cfg.weights
    S = base.S if w.S is None else sc.dt * np.diag(w.S)
    S_H = base.S_H if w.S_H is None else sc.dt * np.diag(w.S_H)
    if w.R is None:
        R = base.R
    else:
        if len(w.R) != sc.control_mode.control_dim(sc.n_r):
            raise ConfigError(f"R override has {len(w.R)} entries", field="weights.R")
        R = sc.dt * np.diag(w.R)
    return CostWeights(S=S, S_H=S_H, R=R, alpha=base.alpha)


def build_scenario(cfg: RunConfig) -> Scenario:
    sc = cfg.scenario
    sc.validate()
    mode = sc.control_mode
    basis = build_basis(STOCHASTIC_DIM, cfg.gpc.degree)
    quad = build_quadrature(STOCHASTIC_DIM, cfg.gpc.quad_points)
    system = RotorSystem(sc.n_r, mode, eps=sc.eps, r_min=sc.r_min)
    model = GpcModel(system, basis, quad)

    rotors = RotorConfig.of(ring_positions(sc.n_r, sc.rotor_ring_radius, sc.target_mean), [0.0] * sc.n_r)
    pos = rotors.position_array()
    sd = float(np.sqrt(sc.initial_cov_scale))
    X0 = project_gaussian_initial(sc.initial_mean, (sd, sd), np.concatenate([pos[:, 0], pos[:, 1]]), basis)

    weights = scenario_weights(cfg)
    target = MomentTarget.of(sc.target_mean, sc.target_var)
    cost = MomentCost(basis, system.n, weights, target)
    problem = ModelProblem(model, cost, X0.flat(), sc.horizon, sc.dt)
    return Scenario(config=cfg, mode=mode, n_r=sc.n_r, dt=sc.dt, horizon=sc.horizon, basis=basis, quad=quad,
                    system=system, model=model, weights=weights, target=target, cost=cost, X0=X0,
                    problem=problem)
