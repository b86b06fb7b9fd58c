# FILE: core/cost/moment_cost.py
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from core.errors import DimensionMismatch, NonDiagonalWeight
from core.flow.state import ControlMode
from core.gpc.basis import HermiteBasis
from core.gpc.expansion import GpcState

N_MOMENTS = 4


@dataclass(frozen=True)
class MomentOutput:
    """[mu_1, mu_2, sigma_11, sigma_22] of the particle coordinates."""
    y: np.ndarray


@dataclass(frozen=True)
class MomentTarget:
    y_ref: np.ndarray

    def __post_init__(self) -> None:
        y = np.asarray(self.y_ref, dtype=np.float64).reshape(-1)
        if y.size != N_MOMENTS:
            raise DimensionMismatch(f"moment target needs {N_MOMENTS} entries, got {y.size}")
        if y[2] < 0.0 or y[3] < 0.0:
            raise ValueError("variance targets must be >= 0")
        object.__setattr__(self, "y_ref", y)

    @staticmethod
    def of(mean, var: float) -> "MomentTarget":
        return MomentTarget(np.array([mean[0], mean[1], var, var], dtype=np.float64))


@dataclass(frozen=True)
class CostWeights:
    """Weight matrices already multiplied by dt; alpha is the torque-mode control scaling."""
    S: np.ndarray
    S_H: np.ndarray
    R: np.ndarray
    alpha: float = 1.0

    def __post_init__(self) -> None:
        for name in ("S", "S_H", "R"):
            m = np.atleast_2d(np.asarray(getattr(self, name), dtype=np.float64))
            if m.shape[0] != m.shape[1]:
                raise DimensionMismatch(f"{name} must be square, got {m.shape}")
            if np.any(np.diag(m) < 0.0):
                raise ValueError(f"{name} has a negative diagonal entry")
            object.__setattr__(self, name, m)
        if self.S.shape[0] != N_MOMENTS or self.S_H.shape[0] != N_MOMENTS:
            raise DimensionMismatch(f"S and S_H must be {N_MOMENTS}x{N_MOMENTS}")
        if np.any(np.diag(self.R) <= 0.0):
            raise ValueError("R must have a positive diagonal")


@dataclass(frozen=True)
class CostGradients:
    l_X: np.ndarray
    l_XX: np.ndarray
    l_u: np.ndarray
    l_uu: np.ndarray
    l_Xu: np.ndarray


def _output_vector(c: np.ndarray, norms_hi: np.ndarray) -> np.ndarray:
    # c: (n, P) coefficient rows, particle coordinates first
    return np.array([
        c[0, 0],
        c[1, 0],
        float(np.sum(c[0, 1:] ** 2 * norms_hi)),
        float(np.sum(c[1, 1:] ** 2 * norms_hi)),
    ])


def build_scenario_weights(mode: ControlMode | str, n_r: int, dt: float, alpha: float = 1.0 / 3.0) -> CostWeights:
    mode = ControlMode.parse(mode)
    S = 0.1 * dt * np.eye(N_MOMENTS)
    if mode is ControlMode.VELOCITY:
        S_H = 1000.0 * dt * np.eye(N_MOMENTS)
        R = dt * np.diag(np.concatenate([np.ones(n_r), 0.1 * np.ones(2 * n_r)]))
        return CostWeights(S=S, S_H=S_H, R=R, alpha=1.0)
    S_H = 500.0 * dt * np.eye(N_MOMENTS)
    R = alpha ** 2 * dt * np.eye(n_r)
    return CostWeights(S=S, S_H=S_H, R=R, alpha=float(alpha))


class MomentCost:
    """
    Moment-tracking cost on the flat gPC state. Particle coordinates occupy
    rows 0 and 1; M(X) = [X00, X10, sum_k X0k^2 n_k, sum_k X1k^2 n_k] (k >= 1).
    """

    def __init__(self, basis: HermiteBasis, n_state: int, weights: CostWeights, target: MomentTarget):
        self.basis = basis
        self.n = int(n_state)
        self.n_terms = basis.size
        self.dim = self.n * self.n_terms
        self.weights = weights
        self.target = target

        self._norms_hi = basis.norms[1:]
        K1 = self.n_terms
        self._rows = (np.arange(1, K1), K1 + np.arange(1, K1))
        self._mu_idx = (0, K1)

    def output(self, X: np.ndarray) -> np.ndarray:
        return _output_vector(np.asarray(X, dtype=np.float64).reshape(self.n, self.n_terms), self._norms_hi)

    def output_jacobian(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64).reshape(-1)
        J = np.zeros((N_MOMENTS, self.dim), dtype=np.float64)
        J[0, self._mu_idx[0]] = 1.0
        J[1, self._mu_idx[1]] = 1.0
        for m, idx in ((2, self._rows[0]), (3, self._rows[1])):
            J[m, idx] = 2.0 * X[idx] * self._norms_hi
        return J

    def _error(self, X: np.ndarray) -> np.ndarray:
        return self.output(X) - self.target.y_ref

    def stage(self, X: np.ndarray, u: np.ndarray) -> float:
        e = self._error(X)
        u = np.asarray(u, dtype=np.float64).reshape(-1)
        return float(e @ self.weights.S @ e + u @ self.weights.R @ u)

    def terminal(self, X: np.ndarray) -> float:
        e = self._error(X)
        return float(e @ self.weights.S_H @ e)

    def _state_terms(self, X: np.ndarray, S: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        off = S - np.diag(np.diag(S))
        if np.any(off != 0.0):
            raise NonDiagonalWeight("moment weight matrix must be diagonal")
        s = np.diag(S)
        e = self._error(X)
        J = self.output_jacobian(X)
        l_X = 2.0 * J.T @ (s * e)
        l_XX = 2.0 * (J.T * s) @ J
        for m, idx in ((2, self._rows[0]), (3, self._rows[1])):
            l_XX[idx, idx] += 2.0 * s[m] * e[m] * 2.0 * self._norms_hi
        return l_X, l_XX

    def stage_gradients(self, X: np.ndarray, u: np.ndarray) -> CostGradients:
        l_X, l_XX = self._state_terms(X, self.weights.S)
        R = self.weights.R
        u = np.asarray(u, dtype=np.float64).reshape(-1)
        return CostGradients(l_X=l_X, l_XX=l_XX, l_u=2.0 * R @ u, l_uu=2.0 * R,
                             l_Xu=np.zeros((self.dim, R.shape[0])))

    def terminal_gradients(self, X: np.ndarray) -> CostGradients:
        l_X, l_XX = self._state_terms(X, self.weights.S_H)
        nc = self.weights.R.shape[0]
        return CostGradients(l_X=l_X, l_XX=l_XX, l_u=np.zeros(nc), l_uu=np.zeros((nc, nc)),
                             l_Xu=np.zeros((self.dim, nc)))


def _cost_for(X: GpcState, basis: HermiteBasis, weights: CostWeights, target: MomentTarget) -> MomentCost:
    return MomentCost(basis, X.n, weights, target)


def moment_output(X: GpcState, basis: HermiteBasis) -> MomentOutput:
    return MomentOutput(_output_vector(X.coeffs, basis.norms[1:]))


def stage_cost(X: GpcState, u, weights: CostWeights, target: MomentTarget, basis: HermiteBasis) -> float:
    u = u.to_array() if hasattr(u, "to_array") else u
    return _cost_for(X, basis, weights, target).stage(X.flat(), u)


def terminal_cost(X: GpcState, weights: CostWeights, target: MomentTarget, basis: HermiteBasis) -> float:
    return _cost_for(X, basis, weights, target).terminal(X.flat())


def cost_gradients(X: GpcState, u, weights: CostWeights, target: MomentTarget, basis: HermiteBasis) -> CostGradients:
    u = u.to_array() if hasattr(u, "to_array") else u
    return _cost_for(X, basis, weights, target).stage_gradients(X.flat(), u)
