# FILE: core/ddp/problem.py
from __future__ import annotations

from typing import Protocol

import numpy as np

from core.cost.moment_cost import CostGradients, MomentCost
from core.ddp.derivatives import ContinuousModel, discrete_derivatives
from core.ddp.types import HessianMode
from core.flow.integrate import rk4_step


class TrajectoryProblem(Protocol):
    """Discrete-time optimal control problem as seen by the solver."""
    x0: np.ndarray
    horizon: int
    control_dim: int

    def step(self, x: np.ndarray, u: np.ndarray) -> np.ndarray: ...

    def linearize(self, x: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]: ...

    def second_order(self, x: np.ndarray, u: np.ndarray,
                     v: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]: ...

    def stage_cost(self, x: np.ndarray, u: np.ndarray) -> float: ...

    def terminal_cost(self, x: np.ndarray) -> float: ...

    def stage_gradients(self, x: np.ndarray, u: np.ndarray) -> CostGradients: ...

    def terminal_gradients(self, x: np.ndarray) -> CostGradients: ...


class ModelProblem:
    """Continuous model discretized by RK4 with a moment-tracking cost."""

    def __init__(self, model: ContinuousModel, cost: MomentCost, x0: np.ndarray, horizon: int, dt: float):
        if horizon < 2:
            raise ValueError("horizon must contain at least two states")
        self.model = model
        self.cost = cost
        self.x0 = np.asarray(x0, dtype=np.float64).reshape(-1)
        self.horizon = int(horizon)
        self.dt = float(dt)
        self.control_dim = int(model.n_c)

    def step(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return rk4_step(self.model.rhs, x, u, self.dt)

    def linearize(self, x: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        d = discrete_derivatives(self.model, x, u, self.dt, HessianMode.GAUSS_NEWTON)
        return d.F_X, d.F_u

    def second_order(self, x: np.ndarray, u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        vXX, vXu, vuu = self.model.hessian_contraction(x, u, v)
        return self.dt * vXX, self.dt * vXu, self.dt * vuu

    def stage_cost(self, x: np.ndarray, u: np.ndarray) -> float:
        return self.cost.stage(x, u)

    def terminal_cost(self, x: np.ndarray) -> float:
        return self.cost.terminal(x)

    def stage_gradients(self, x: np.ndarray, u: np.ndarray) -> CostGradients:
        return self.cost.stage_gradients(x, u)

    def terminal_gradients(self, x: np.ndarray) -> CostGradients:
        return self.cost.terminal_gradients(x)
