# FILE: core/flow/rotlet.py
from __future__ import annotations

import numpy as np

from core.errors import SingularEvaluation
from core.flow.state import RotorConfig
from core.geometry.vec2 import Vec2

DEFAULT_R_MIN = 1e-4


def regularization(r2: np.ndarray, eps: float, r_min: float, guard: bool,
                   what: str = "") -> tuple[np.ndarray, np.ndarray]:
    """
    Return (eps_eff, near) for squared distances r2.

    eps > 0 selects the blob kernel everywhere. With eps = 0 a distance below
    r_min raises SingularEvaluation, or with guard=True is evaluated with eps
    clamped to r_min and reported in `near`.
    """
    r2 = np.asarray(r2, dtype=np.float64)
    near = r2 < float(r_min) ** 2
    eps_eff = np.full(r2.shape, float(eps), dtype=np.float64)
    if not np.any(near):
        return eps_eff, near
    if guard:
        eps_eff = np.where(near, max(float(eps), float(r_min)), eps_eff)
        return eps_eff, near
    if eps > 0.0:
        return eps_eff, np.zeros_like(near)
    raise SingularEvaluation(float(np.sqrt(np.min(r2))), r_min, what)


def rotlet_kernel(d: np.ndarray, eps: np.ndarray | float = 0.0,
                  order: int = 0) -> tuple[np.ndarray, np.ndarray | None, np.ndarray | None]:
    """
    Unit-strength rotlet as a function of the displacement d = x - x_R.

        g(d) = -k x d / (|d|^2 + eps^2) = (d_y, -d_x) / s

    Returns (value (...,2), gradient (...,2,2), hessian (...,2,2,2)); derivatives
    are taken with respect to d and are None below the requested order.
    Gradient index is [component, d_axis]; hessian [component, d_axis, d_axis].
    """
    d = np.asarray(d, dtype=np.float64)
    dx = d[..., 0]
    dy = d[..., 1]
    s = dx * dx + dy * dy + np.asarray(eps, dtype=np.float64) ** 2
    inv = 1.0 / s

    val = np.stack([dy * inv, -dx * inv], axis=-1)
    if order < 1:
        return val, None, None

    inv2 = inv * inv
    grad = np.empty(d.shape[:-1] + (2, 2), dtype=np.float64)
    grad[..., 0, 0] = -2.0 * dx * dy * inv2
    grad[..., 0, 1] = inv - 2.0 * dy * dy * inv2
    grad[..., 1, 0] = -inv + 2.0 * dx * dx * inv2
    grad[..., 1, 1] = 2.0 * dx * dy * inv2
    if order < 2:
        return val, grad, None

    inv3 = inv2 * inv
    hess = np.empty(d.shape[:-1] + (2, 2, 2), dtype=np.float64)
    # component 0: dy / s
    hess[..., 0, 0, 0] = -2.0 * dy * inv2 + 8.0 * dx * dx * dy * inv3
    hess[..., 0, 0, 1] = -2.0 * dx * inv2 + 8.0 * dx * dy * dy * inv3
    hess[..., 0, 1, 0] = hess[..., 0, 0, 1]
    hess[..., 0, 1, 1] = -6.0 * dy * inv2 + 8.0 * dy ** 3 * inv3
    # component 1: -dx / s
    hess[..., 1, 0, 0] = 6.0 * dx * inv2 - 8.0 * dx ** 3 * inv3
    hess[..., 1, 0, 1] = 2.0 * dy * inv2 - 8.0 * dx * dx * dy * inv3
    hess[..., 1, 1, 0] = hess[..., 1, 0, 1]
    hess[..., 1, 1, 1] = 2.0 * dx * inv2 - 8.0 * dx * dy * dy * inv3
    return val, grad, hess


def rotlet_velocity(eval_point: Vec2, rotor_pos: Vec2, strength: float,
                    eps: float = 0.0, r_min: float = DEFAULT_R_MIN) -> Vec2:
    """u = -gamma k x (x - x_R) / (r^2 + eps^2)."""
    d = np.array([eval_point.x - rotor_pos.x, eval_point.y - rotor_pos.y], dtype=np.float64)
    eps_eff, _ = regularization(d @ d, eps, r_min, guard=False, what="point vs rotor")
    val, _, _ = rotlet_kernel(d, eps_eff)
    return Vec2(float(strength * val[0]), float(strength * val[1]))


def velocity_field(points: np.ndarray, rotor_positions: np.ndarray, strengths: np.ndarray,
                   eps: float = 0.0, r_min: float = DEFAULT_R_MIN,
                   guard: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """
    Superposed rotlet velocity at points (...,2) from rotors (n_r,2).
    Returns (velocity (...,2), near (...)) where `near` marks points that had
    a guarded evaluation.
    """
    pts = np.asarray(points, dtype=np.float64)
    rp = np.asarray(rotor_positions, dtype=np.float64).reshape(-1, 2)
    g = np.asarray(strengths, dtype=np.float64).reshape(-1)

    d = pts[..., None, :] - rp
    r2 = np.einsum("...k,...k->...", d, d)
    eps_eff, near = regularization(r2, eps, r_min, guard, what="point vs rotor")
    val, _, _ = rotlet_kernel(d, eps_eff)
    vel = np.einsum("...ik,i->...k", val, g)
    return vel, np.any(near, axis=-1)


def superposed_velocity(eval_point: Vec2, rotors: RotorConfig,
                        eps: float = 0.0, r_min: float = DEFAULT_R_MIN) -> Vec2:
    vel, _ = velocity_field(eval_point.as_array(), rotors.position_array(),
                            rotors.strength_array(), eps=eps, r_min=r_min)
    return Vec2(float(vel[0]), float(vel[1]))
