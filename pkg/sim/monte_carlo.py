# FILE: sim/monte_carlo.py
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from core.cost.moment_cost import CostWeights, MomentTarget
from core.errors import DimensionMismatch
from core.flow.integrate import rk4_step
from core.flow.rotlet import DEFAULT_R_MIN
from core.flow.state import ControlMode
from core.flow.systems import RotorSystem
from core.metrics import sample_moments
from sim.ensemble import ParticleEnsemble

logger = logging.getLogger(__name__)


@dataclass
class EnsembleHistory:
    """
    Per-step sample moments of an advected ensemble plus strided snapshots.
    `flags` marks particles that had at least one guarded (near-rotor) evaluation.
    """
    means: np.ndarray                # (H, 2)
    covs: np.ndarray                 # (H, 2, 2), NaN for N = 1
    flags: np.ndarray                # (N,) bool
    snapshots: dict[int, np.ndarray] = field(default_factory=dict)   # step -> (N, 2)
    final: np.ndarray | None = None  # (N, 2)
    seed: int = 0

    @property
    def horizon(self) -> int:
        return int(self.means.shape[0])

    def moment_vectors(self) -> np.ndarray:
        """(H, 4) rows [mu1, mu2, s11, s22]."""
        return np.column_stack([self.means, self.covs[:, 0, 0], self.covs[:, 1, 1]])


def advect(ensemble: ParticleEnsemble, rotor_trajectory: np.ndarray, controls: np.ndarray, dt: float,
           mode: ControlMode | str, eps: float = 0.0, r_min: float = DEFAULT_R_MIN,
           snapshot_stride: int = 0) -> EnsembleHistory:
    """
    Integrate every particle together with the rotors by RK4. Rotors start at
    rotor_trajectory[0] (n_r, 2) and follow the same dynamics as the solved run.
    Near-singular evaluations are clamped to r_min and flagged per particle.
    """
    rotors = np.asarray(rotor_trajectory, dtype=np.float64)
    start = rotors[0] if rotors.ndim == 3 else rotors
    n_r = start.shape[0]
    ctrl = np.asarray(controls, dtype=np.float64)
    system = RotorSystem(n_r, mode, eps=eps, r_min=r_min)
    if ctrl.ndim != 2 or ctrl.shape[1] != system.n_c:
        raise DimensionMismatch(f"controls must be (H-1, {system.n_c}), got {ctrl.shape}")

    N = ensemble.N
    x = np.empty((N, system.n), dtype=np.float64)
    x[:, :2] = ensemble.points
    x[:, 2:2 + n_r] = start[:, 0]
    x[:, 2 + n_r:] = start[:, 1]

    flags = np.zeros(N, dtype=bool)

    def rhs(state: np.ndarray, u: np.ndarray) -> np.ndarray:
        f, near = system.rhs_guarded(state, u)
        flags[:] |= near
        return f

    H = ctrl.shape[0] + 1
    means = np.empty((H, 2))
    covs = np.empty((H, 2, 2))
    snaps: dict[int, np.ndarray] = {}

    def record(t: int) -> None:
        m = sample_moments(x[:, :2])
        means[t] = m.mean
        covs[t] = m.cov
        if snapshot_stride and (t % snapshot_stride == 0 or t == H - 1):
            snaps[t] = x[:, :2].copy()

    record(0)
    for t in range(H - 1):
        x = rk4_step(rhs, x, ctrl[t], dt)
        record(t + 1)

    n_flag = int(np.count_nonzero(flags))
    if n_flag:
        logger.warning("Monte Carlo: %d of %d particles passed within r_min=%.3g of a rotor", n_flag, N, r_min)
    return EnsembleHistory(means=means, covs=covs, flags=flags, snapshots=snaps,
                           final=x[:, :2].copy(), seed=ensemble.seed)


def true_cost(history: EnsembleHistory, controls: np.ndarray, weights: CostWeights, target: MomentTarget) -> float:
    """Moment-tracking cost evaluated on the sample moments."""
    M = history.moment_vectors()
    ctrl = np.asarray(controls, dtype=np.float64)
    if ctrl.shape[0] != M.shape[0] - 1:
        raise DimensionMismatch(f"{ctrl.shape[0]} controls for {M.shape[0]} moment rows")
    E = M - target.y_ref
    stage = np.einsum("ti,ij,tj->t", E[:-1], weights.S, E[:-1]) + np.einsum("ti,ij,tj->t", ctrl, weights.R, ctrl)
    terminal = E[-1] @ weights.S_H @ E[-1]
    return float(np.sum(stage) + terminal)
