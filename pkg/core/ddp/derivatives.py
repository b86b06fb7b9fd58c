# FILE: core/ddp/derivatives.py
from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from core.ddp.types import HessianMode


class ContinuousModel(Protocol):
    dim: int
    n_c: int

    def rhs(self, x: np.ndarray, u: np.ndarray) -> np.ndarray: ...

    def jacobians(self, x: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]: ...

    def hessians(self, x: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]: ...

    def hessian_contraction(self, x: np.ndarray, u: np.ndarray,
                            v: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]: ...


@dataclass
class DiscreteDerivatives:
    x_next: np.ndarray
    F_X: np.ndarray
    F_u: np.ndarray
    F_XX: np.ndarray | None = None
    F_Xu: np.ndarray | None = None
    F_uu: np.ndarray | None = None


def discrete_derivatives(model: ContinuousModel, x: np.ndarray, u: np.ndarray, dt: float,
                         hessian_mode: HessianMode | str = HessianMode.GAUSS_NEWTON) -> DiscreteDerivatives:
    """
    Derivatives of one RK4 step F(x, u).

    First order is the exact chain rule through the four stages. Second-order
    tensors follow the Euler-consistent approximation F ~ x + dt f.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    n = x.size
    eye = np.eye(n)

    k1 = model.rhs(x, u)
    A, B = model.jacobians(x, u)
    dk1x, dk1u = A, B

    x2 = x + 0.5 * dt * k1
    k2 = model.rhs(x2, u)
    A, B = model.jacobians(x2, u)
    dk2x = A @ (eye + 0.5 * dt * dk1x)
    dk2u = 0.5 * dt * (A @ dk1u) + B

    x3 = x + 0.5 * dt * k2
    k3 = model.rhs(x3, u)
    A, B = model.jacobians(x3, u)
    dk3x = A @ (eye + 0.5 * dt * dk2x)
    dk3u = 0.5 * dt * (A @ dk2u) + B

    x4 = x + dt * k3
    k4 = model.rhs(x4, u)
    A, B = model.jacobians(x4, u)
    dk4x = A @ (eye + dt * dk3x)
    dk4u = dt * (A @ dk3u) + B

    out = DiscreteDerivatives(
        x_next=x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4),
        F_X=eye + (dt / 6.0) * (dk1x + 2.0 * dk2x + 2.0 * dk3x + dk4x),
        F_u=(dt / 6.0) * (dk1u + 2.0 * dk2u + 2.0 * dk3u + dk4u),
    )
    if HessianMode.parse(hessian_mode) is HessianMode.FULL:
        fXX, fXu, fuu = model.hessians(x, u)
        out.F_XX, out.F_Xu, out.F_uu = dt * fXX, dt * fXu, dt * fuu
    return out
