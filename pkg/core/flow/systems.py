# FILE: core/flow/systems.py
from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from core.errors import DimensionMismatch
from core.flow.rotlet import DEFAULT_R_MIN, regularization, rotlet_kernel
from core.flow.state import ControlMode, ControlVector, SystemState, state_dim


@dataclass(frozen=True)
class DerivativeBundle:
    """
    Analytic derivatives of a rhs f(x, u); a leading batch shape is allowed.
        jac_state (..., n, n), jac_control (..., n, nc),
        hess_state_state (..., n, n, n), hess_control_control (..., n, nc, nc),
        hess_state_control (..., n, n, nc).
    """
    jac_state: np.ndarray
    jac_control: np.ndarray
    hess_state_state: np.ndarray
    hess_control_control: np.ndarray
    hess_state_control: np.ndarray


class PhysicalSystem(Protocol):
    """Batched ODE right-hand side: x has shape (..., n), u is shared (nc,)."""
    n: int
    n_c: int

    def rhs(self, x: np.ndarray, u: np.ndarray) -> np.ndarray: ...

    def derivatives(self, x: np.ndarray, u: np.ndarray, order: int = 2) -> tuple[np.ndarray, DerivativeBundle]: ...


class RotorSystem:
    """
    Particle advected by n_r rotlets; rotors either follow prescribed
    velocities (VELOCITY) or each other's flow without self-contribution (TORQUE).
    """

    def __init__(self, n_r: int, mode: ControlMode | str, eps: float = 0.0, r_min: float = DEFAULT_R_MIN):
        if int(n_r) < 1:
            raise DimensionMismatch("need at least one rotor")
        self.n_r = int(n_r)
        self.mode = ControlMode.parse(mode)
        self.eps = float(eps)
        self.r_min = float(r_min)
        self.n = state_dim(self.n_r)
        self.n_c = self.mode.control_dim(self.n_r)

        targets: list[tuple[int, int]] = []
        sources: list[tuple[int, int]] = []
        src_rotor: list[int] = []
        for i in range(self.n_r):
            targets.append((0, 1))
            sources.append(self._rotor_idx(i))
            src_rotor.append(i)
        if self.mode is ControlMode.TORQUE:
            for j in range(self.n_r):
                for i in range(self.n_r):
                    if i == j:
                        continue
                    targets.append(self._rotor_idx(j))
                    sources.append(self._rotor_idx(i))
                    src_rotor.append(i)
        self._targets = np.asarray(targets, dtype=np.intp)
        self._sources = np.asarray(sources, dtype=np.intp)
        self._src_rotor = np.asarray(src_rotor, dtype=np.intp)

    def _rotor_idx(self, i: int) -> tuple[int, int]:
        return 2 + i, 2 + self.n_r + i

    def _check(self, x: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=np.float64)
        u = np.asarray(u, dtype=np.float64).reshape(-1)
        if x.shape[-1] != self.n:
            raise DimensionMismatch(f"state has {x.shape[-1]} entries, expected {self.n}")
        if u.size != self.n_c:
            raise DimensionMismatch(f"control has {u.size} entries, expected {self.n_c} ({self.mode.value})")
        return x, u

    def rhs(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        f, _, _ = self._evaluate(x, u, order=0, guard=False)
        return f

    def rhs_guarded(self, x: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """rhs with near-singular pairs evaluated at eps = r_min; returns (f, near rows)."""
        f, _, near = self._evaluate(x, u, order=0, guard=True)
        return f, near

    def derivatives(self, x: np.ndarray, u: np.ndarray, order: int = 2) -> tuple[np.ndarray, DerivativeBundle]:
        f, bundle, _ = self._evaluate(x, u, order=order, guard=False)
        assert bundle is not None
        return f, bundle

    def _evaluate(self, x, u, order: int, guard: bool):
        x, u = self._check(x, u)
        batch = x.shape[:-1]
        n, nc, nr = self.n, self.n_c, self.n_r
        gam = u[:nr]

        T, S, src = self._targets, self._sources, self._src_rotor
        d = x[..., T] - x[..., S]
        r2 = np.einsum("...pk,...pk->...p", d, d)
        eps_eff, near = regularization(r2, self.eps, self.r_min, guard, what=f"{self.mode.value} system")
        val, grad, hess = rotlet_kernel(d, eps_eff, order=min(order, 2))

        f = np.zeros(batch + (n,), dtype=np.float64)
        A = np.zeros(batch + (n, n), dtype=np.float64) if order >= 1 else None
        B = np.zeros(batch + (n, nc), dtype=np.float64) if order >= 1 else None
        Hxx = np.zeros(batch + (n, n, n), dtype=np.float64) if order >= 2 else None
        Hxu = np.zeros(batch + (n, n, nc), dtype=np.float64) if order >= 2 else None

        for p in range(T.shape[0]):
            t, s, i = T[p], S[p], int(src[p])
            g = gam[i]
            f[..., t] += g * val[..., p, :]
            if order < 1:
                continue
            G = grad[..., p, :, :]
            A[..., t[:, None], t[None, :]] += g * G
            A[..., t[:, None], s[None, :]] -= g * G
            B[..., t, i] += val[..., p, :]
            if order < 2:
                continue
            H = g * hess[..., p, :, :, :]
            c = t[:, None, None]
            Hxx[..., c, t[None, :, None], t[None, None, :]] += H
            Hxx[..., c, t[None, :, None], s[None, None, :]] -= H
            Hxx[..., c, s[None, :, None], t[None, None, :]] -= H
            Hxx[..., c, s[None, :, None], s[None, None, :]] += H
            Hxu[..., t[:, None], t[None, :], i] += G
            Hxu[..., t[:, None], s[None, :], i] -= G

        if self.mode is ControlMode.VELOCITY:
            f[..., 2:2 + nr] = u[nr:2 * nr]
            f[..., 2 + nr:] = u[2 * nr:]
            if order >= 1:
                for j in range(nr):
                    B[..., 2 + j, nr + j] = 1.0
                    B[..., 2 + nr + j, 2 * nr + j] = 1.0

        bundle = None
        if order >= 1:
            if Hxx is None:
                Hxx = np.zeros(batch + (n, n, n), dtype=np.float64)
                Hxu = np.zeros(batch + (n, n, nc), dtype=np.float64)
            bundle = DerivativeBundle(
                jac_state=A,
                jac_control=B,
                hess_state_state=Hxx,
                hess_control_control=np.zeros(batch + (n, nc, nc), dtype=np.float64),
                hess_state_control=Hxu,
            )
        return f, bundle, np.any(near, axis=-1)


class LinearSystem:
    """x' = A x + B u, used as an exact oracle for the Galerkin and DDP layers."""

    def __init__(self, A: np.ndarray, B: np.ndarray):
        self.A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        self.B = np.atleast_2d(np.asarray(B, dtype=np.float64))
        if self.A.shape[0] != self.A.shape[1] or self.B.shape[0] != self.A.shape[0]:
            raise DimensionMismatch(f"incompatible A {self.A.shape} and B {self.B.shape}")
        self.n = self.A.shape[0]
        self.n_c = self.B.shape[1]

    def rhs(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return x @ self.A.T + self.B @ np.asarray(u, dtype=np.float64).reshape(-1)

    def derivatives(self, x: np.ndarray, u: np.ndarray, order: int = 2) -> tuple[np.ndarray, DerivativeBundle]:
        x = np.asarray(x, dtype=np.float64)
        batch = x.shape[:-1]
        n, nc = self.n, self.n_c
        return self.rhs(x, u), DerivativeBundle(
            jac_state=np.broadcast_to(self.A, batch + (n, n)).copy(),
            jac_control=np.broadcast_to(self.B, batch + (n, nc)).copy(),
            hess_state_state=np.zeros(batch + (n, n, n)),
            hess_control_control=np.zeros(batch + (n, nc, nc)),
            hess_state_control=np.zeros(batch + (n, n, nc)),
        )


def _system_for(state: SystemState, u: ControlVector, mode: ControlMode, eps: float, r_min: float) -> RotorSystem:
    if u.mode is not mode:
        raise DimensionMismatch(f"expected a {mode.value} control vector, got {u.mode.value}")
    if u.n_r != state.n_r:
        raise DimensionMismatch(f"control is for {u.n_r} rotors, state has {state.n_r}")
    return RotorSystem(state.n_r, mode, eps=eps, r_min=r_min)


def velocity_control_rhs(state: SystemState, u: ControlVector, eps: float = 0.0,
                         r_min: float = DEFAULT_R_MIN) -> np.ndarray:
    sys = _system_for(state, u, ControlMode.VELOCITY, eps, r_min)
    return sys.rhs(state.to_array(), u.to_array())


def torque_only_rhs(state: SystemState, u: ControlVector, eps: float = 0.0,
                    r_min: float = DEFAULT_R_MIN) -> np.ndarray:
    sys = _system_for(state, u, ControlMode.TORQUE, eps, r_min)
    return sys.rhs(state.to_array(), u.to_array())


def analytic_derivatives(state: SystemState, u: ControlVector, mode: ControlMode | str,
                         eps: float = 0.0, r_min: float = DEFAULT_R_MIN) -> DerivativeBundle:
    sys = _system_for(state, u, ControlMode.parse(mode), eps, r_min)
    _, bundle = sys.derivatives(state.to_array(), u.to_array(), order=2)
    return bundle


def point_vortex_invariants(rotor_positions: np.ndarray, strengths: np.ndarray) -> np.ndarray:
    """
    First integrals of the torque-only rotor dynamics with constant strengths:
    [sum g x, sum g y, sum g |x|^2, sum_{i<j} g_i g_j ln r_ij].
    """
    p = np.asarray(rotor_positions, dtype=np.float64).reshape(-1, 2)
    g = np.asarray(strengths, dtype=np.float64).reshape(-1)
    lin = g @ p
    ang = float(g @ np.einsum("ik,ik->i", p, p))
    ham = 0.0
    for i in range(len(g)):
        for j in range(i + 1, len(g)):
            ham += g[i] * g[j] * np.log(np.linalg.norm(p[i] - p[j]))
    return np.array([lin[0], lin[1], ang, ham], dtype=np.float64)
