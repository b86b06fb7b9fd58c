# FILE: core/gpc/galerkin.py
from __future__ import annotations

import logging
from typing import Sequence

import numpy as np

from core.errors import DimensionMismatch, SingularEvaluation
from core.flow.integrate import rk4_step
from core.flow.rotlet import DEFAULT_R_MIN
from core.flow.state import ControlMode, rotors_from_state_dim
from core.flow.systems import PhysicalSystem, RotorSystem
from core.gpc.basis import HermiteBasis
from core.gpc.expansion import GpcState
from core.gpc.quadrature import QuadratureRule

logger = logging.getLogger(__name__)


def _control_array(u) -> np.ndarray:
    if hasattr(u, "to_array"):
        return u.to_array()
    return np.asarray(u, dtype=np.float64).reshape(-1)


class GpcModel:
    """
    Galerkin-projected coefficient dynamics dX/dt = f(X, u) for a batched
    physical system. X is handled in flat row-major form (state, basis).

    With P[q, j] = w_q phi_j(z_q) / <phi_j^2>, every projection is a
    contraction over the node axis q, so Jacobians and Hessians reduce to
    tensordot calls against precomputed node products.
    """

    def __init__(self, system: PhysicalSystem, basis: HermiteBasis, quad: QuadratureRule):
        if quad.d != basis.d:
            raise DimensionMismatch(f"quadrature is {quad.d}-D but basis is {basis.d}-D")
        self.system = system
        self.basis = basis
        self.quad = quad
        self.n = int(system.n)
        self.n_terms = basis.size
        self.n_c = int(system.n_c)
        self.dim = self.n * self.n_terms

        self.phi = basis.evaluate(quad.nodes)                               # (Q, K+1)
        self.proj = quad.weights[:, None] * self.phi / basis.norms[None, :]  # (Q, K+1)
        self._phi_proj = np.einsum("qb,qj->qbj", self.phi, self.proj)
        self._phi_phi = np.einsum("qb,qd->qbd", self.phi, self.phi)

    def _coeffs(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.size != self.dim:
            raise DimensionMismatch(f"gPC state has {X.size} entries, expected {self.dim}")
        return X.reshape(self.n, self.n_terms)

    def node_states(self, X: np.ndarray) -> np.ndarray:
        return self.phi @ self._coeffs(X).T

    def rhs(self, X: np.ndarray, u) -> np.ndarray:
        f = self.system.rhs(self.node_states(X), _control_array(u))
        return (f.T @ self.proj).ravel()

    def jacobians(self, X: np.ndarray, u) -> tuple[np.ndarray, np.ndarray]:
        """(df/dX (N, N), df/du (N, nc)) by quadrature of the node Jacobians."""
        _, der = self.system.derivatives(self.node_states(X), _control_array(u), order=1)
        # dX[i,j]/dX[a,b] = sum_q A_q[i,a] phi_b P_j
        JX = np.tensordot(der.jac_state, self._phi_proj, axes=(0, 0))      # (i, a, b, j)
        JX = JX.transpose(0, 3, 1, 2).reshape(self.dim, self.dim)
        Ju = np.tensordot(der.jac_control, self.proj, axes=(0, 0))         # (i, c, j)
        Ju = Ju.transpose(0, 2, 1).reshape(self.dim, self.n_c)
        return JX, Ju

    def hessians(self, X: np.ndarray, u) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Full tensors (N, N, N), (N, N, nc), (N, nc, nc); fine for small bases only."""
        _, der = self.system.derivatives(self.node_states(X), _control_array(u), order=2)
        phi3 = np.einsum("qb,qd,qj->qbdj", self.phi, self.phi, self.proj)
        H = np.tensordot(der.hess_state_state, phi3, axes=(0, 0))          # (i, a, c, b, d, j)
        H = H.transpose(0, 5, 1, 3, 2, 4).reshape(self.dim, self.dim, self.dim)
        Hu = np.tensordot(der.hess_state_control, self._phi_proj, axes=(0, 0))  # (i, a, c, b, j)
        Hu = Hu.transpose(0, 4, 1, 3, 2).reshape(self.dim, self.dim, self.n_c)
        Huu = np.tensordot(der.hess_control_control, self.proj, axes=(0, 0))    # (i, c, e, j)
        Huu = Huu.transpose(0, 3, 1, 2).reshape(self.dim, self.n_c, self.n_c)
        return H, Hu, Huu

    def hessian_contraction(self, X: np.ndarray, u, v: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """sum_l v_l d2f_l for the three Hessian blocks, without forming the tensors."""
        _, der = self.system.derivatives(self.node_states(X), _control_array(u), order=2)
        V = self._coeffs(v)
        s = self.proj @ V.T                                                 # (Q, n)
        A = np.einsum("qi,qiac->qac", s, der.hess_state_state)
        vXX = np.tensordot(A, self._phi_phi, axes=(0, 0))                   # (a, c, b, d)
        vXX = vXX.transpose(0, 2, 1, 3).reshape(self.dim, self.dim)
        Au = np.einsum("qi,qiac->qac", s, der.hess_state_control)
        vXu = np.tensordot(Au, self.phi, axes=(0, 0))                       # (a, c, b)
        vXu = vXu.transpose(0, 2, 1).reshape(self.dim, self.n_c)
        vuu = np.einsum("qi,qice->ce", s, der.hess_control_control)
        return 0.5 * (vXX + vXX.T), vXu, 0.5 * (vuu + vuu.T)

    def propagate(self, X0: np.ndarray, controls: Sequence, dt: float) -> np.ndarray:
        """RK4 rollout; returns flat states (H, N). Singular nodes raise with the step index."""
        ctrl = [_control_array(u) for u in controls]
        out = np.empty((len(ctrl) + 1, self.dim), dtype=np.float64)
        out[0] = np.asarray(X0, dtype=np.float64).reshape(-1)
        for t, u in enumerate(ctrl):
            try:
                out[t + 1] = rk4_step(self.rhs, out[t], u, dt)
            except SingularEvaluation as e:
                logger.debug("gPC rollout hit a singular node at step %d", t)
                raise e.at_step(t) from e
        return out


def rotor_model(X: GpcState, basis: HermiteBasis, quad: QuadratureRule, mode: ControlMode | str,
                eps: float = 0.0, r_min: float = DEFAULT_R_MIN) -> GpcModel:
    system = RotorSystem(rotors_from_state_dim(X.n), mode, eps=eps, r_min=r_min)
    return GpcModel(system, basis, quad)


def galerkin_rhs(X: GpcState, u, basis: HermiteBasis, quad: QuadratureRule, mode: ControlMode | str,
                 eps: float = 0.0, r_min: float = DEFAULT_R_MIN) -> GpcState:
    model = rotor_model(X, basis, quad, mode, eps, r_min)
    return GpcState.from_flat(model.rhs(X.flat(), u), X.n)


def propagate(X0: GpcState, controls: Sequence, dt: float, basis: HermiteBasis, quad: QuadratureRule,
              mode: ControlMode | str, eps: float = 0.0, r_min: float = DEFAULT_R_MIN) -> list[GpcState]:
    model = rotor_model(X0, basis, quad, mode, eps, r_min)
    states = model.propagate(X0.flat(), controls, dt)
    return [GpcState.from_flat(s, X0.n) for s in states]


def gpc_jacobian(X: GpcState, u, basis: HermiteBasis, quad: QuadratureRule, mode: ControlMode | str,
                 eps: float = 0.0, r_min: float = DEFAULT_R_MIN) -> tuple[np.ndarray, np.ndarray]:
    return rotor_model(X, basis, quad, mode, eps, r_min).jacobians(X.flat(), u)


def gpc_hessians(X: GpcState, u, basis: HermiteBasis, quad: QuadratureRule, mode: ControlMode | str,
                 eps: float = 0.0, r_min: float = DEFAULT_R_MIN) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return rotor_model(X, basis, quad, mode, eps, r_min).hessians(X.flat(), u)
