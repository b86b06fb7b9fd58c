# FILE: core/ddp/types.py
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any

import numpy as np


class HessianMode(str, Enum):
    GAUSS_NEWTON = "gauss_newton"
    FULL = "full"

    @staticmethod
    def parse(v: "HessianMode | str") -> "HessianMode":
        if isinstance(v, HessianMode):
            return v
        s = str(v).strip().lower().replace("-", "_")
        aliases = {"gauss_newton": "gauss_newton", "gaussnewton": "gauss_newton", "ilqr": "gauss_newton",
                   "full": "full", "fullddp": "full", "full_ddp": "full", "ddp": "full"}
        if s not in aliases:
            raise ValueError(f"unknown hessian mode '{v}'")
        return HessianMode(aliases[s])


def default_schedule(min_exponent: int = 10) -> tuple[float, ...]:
    return tuple(2.0 ** -k for k in range(int(min_exponent) + 1))


@dataclass(frozen=True)
class DdpOptions:
    max_iters: int = 500
    cost_tol: float = 1e-6
    reg_init: float = 1e-6
    reg_min: float = 1e-9
    reg_max: float = 1e9
    reg_factor: float = 10.0
    reg_decrease: float = 2.0
    stepsize_schedule: tuple[float, ...] = field(default_factory=default_schedule)
    hessian_mode: HessianMode = HessianMode.GAUSS_NEWTON
    armijo: float = 1e-4

    def __post_init__(self) -> None:
        object.__setattr__(self, "hessian_mode", HessianMode.parse(self.hessian_mode))
        object.__setattr__(self, "stepsize_schedule", tuple(float(a) for a in self.stepsize_schedule))
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.cost_tol <= 0.0:
            raise ValueError("cost_tol must be > 0")
        if not (0.0 < self.reg_min <= self.reg_init <= self.reg_max):
            raise ValueError("need 0 < reg_min <= reg_init <= reg_max")
        if self.reg_factor <= 1.0 or self.reg_decrease <= 1.0:
            raise ValueError("regularization factors must be > 1")
        sched = self.stepsize_schedule
        if not sched or any(a <= 0.0 or a > 1.0 for a in sched) or any(b >= a for a, b in zip(sched, sched[1:])):
            raise ValueError("stepsize schedule must be strictly decreasing in (0, 1]")

    def clamp_reg(self, reg: float) -> float:
        return min(max(reg, self.reg_min), self.reg_max)


@dataclass
class Trajectory:
    states: np.ndarray      # (H, N)
    controls: np.ndarray    # (H-1, nc)
    total_cost: float

    @property
    def horizon(self) -> int:
        return int(self.states.shape[0])


@dataclass
class FeedbackPolicy:
    k: np.ndarray   # (H-1, nc)
    K: np.ndarray   # (H-1, nc, N)

    @staticmethod
    def zeros(horizon: int, n_c: int, n: int) -> "FeedbackPolicy":
        return FeedbackPolicy(np.zeros((horizon - 1, n_c)), np.zeros((horizon - 1, n_c, n)))


@dataclass
class QExpansion:
    Q_X: np.ndarray
    Q_u: np.ndarray
    Q_XX: np.ndarray
    Q_uu: np.ndarray
    Q_Xu: np.ndarray


@dataclass
class BackwardResult:
    policy: FeedbackPolicy
    dV1: float
    dV2: float

    def expected_improvement(self, stepsize: float) -> float:
        return -(stepsize * self.dV1 + stepsize ** 2 * self.dV2)


@dataclass(frozen=True)
class NoImprovement:
    """Line search exhausted its schedule without an acceptable step."""
    tried: int
    expected: float


@dataclass
class ConvergenceReport:
    converged: bool
    iterations: int
    reason: str
    final_reg: float
    max_iters_reached: bool = False
    accepted_stepsizes: list[float] = field(default_factory=list)
    rejected_iterations: int = 0
    policy_reg: float = 0.0   # regularization the returned policy was built with

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass
class SolveResult:
    trajectory: Trajectory
    policy: FeedbackPolicy
    cost_history: list[float]
    report: ConvergenceReport
