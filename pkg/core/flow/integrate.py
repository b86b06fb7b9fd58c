# FILE: core/flow/integrate.py
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from core.errors import SingularEvaluation
from core.flow.state import SystemState

Rhs = Callable[[np.ndarray, np.ndarray], np.ndarray]


def rk4_step(rhs: Rhs, state, u, dt: float):
    """
    One classical RK4 step with u held over the step.
    Accepts a flat/batched array or a SystemState and returns the same kind.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    as_state = isinstance(state, SystemState)
    x = state.to_array() if as_state else np.asarray(state, dtype=np.float64)
    u = u.to_array() if hasattr(u, "to_array") else np.asarray(u, dtype=np.float64)

    k1 = rhs(x, u)
    k2 = rhs(x + 0.5 * dt * k1, u)
    k3 = rhs(x + 0.5 * dt * k2, u)
    k4 = rhs(x + dt * k3, u)
    x_next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return SystemState.from_array(x_next) if as_state else x_next


def rollout(rhs: Rhs, x0: np.ndarray, controls: Sequence[np.ndarray] | np.ndarray, dt: float) -> np.ndarray:
    """States (H, ...) for H-1 controls; a SingularEvaluation is re-raised with its step index."""
    x = np.asarray(x0, dtype=np.float64)
    ctrl = np.asarray(controls, dtype=np.float64)
    out = np.empty((ctrl.shape[0] + 1,) + x.shape, dtype=np.float64)
    out[0] = x
    for t in range(ctrl.shape[0]):
        try:
            x = rk4_step(rhs, x, ctrl[t], dt)
        except SingularEvaluation as e:
            raise e.at_step(t) from e
        out[t + 1] = x
    return out
