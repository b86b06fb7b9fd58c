# FILE: core/ftle/field.py
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from core.errors import NegativeEigenvalue
from core.ftle.flowmap import FlowMapField
from core.ftle.grid import FLAG_BOUNDARY, FtleGridSpec


@dataclass
class FtleField:
    grid: FtleGridSpec
    sigma: np.ndarray                     # (ny, nx)
    flags: np.ndarray                     # (ny, nx) uint8
    dt: float = 0.0
    eigenvectors: np.ndarray | None = None  # (ny, nx, 2), leading stretching direction

    @property
    def tau(self) -> float:
        return self.grid.tau

    @property
    def t0(self) -> float:
        return self.grid.t0


def cauchy_green(flowmap: FlowMapField, grid: FtleGridSpec | None = None) -> tuple[np.ndarray, np.ndarray]:
    """
    C = J^T J per node with J from central differences of the mapped positions
    (one-sided on the grid boundary, where nodes get FLAG_BOUNDARY). A grid only
    three nodes wide along an axis has no interior stencil there, so all of
    its nodes are flagged.
    """
    grid = grid or flowmap.grid
    hx, hy = grid.spacing
    phi = flowmap.positions
    J = np.empty(phi.shape[:2] + (2, 2), dtype=np.float64)
    for i in range(2):
        d_dy, d_dx = np.gradient(phi[..., i], hy, hx, edge_order=1)
        J[..., i, 0] = d_dx
        J[..., i, 1] = d_dy
    C = np.einsum("...ki,...kj->...ij", J, J)

    flags = flowmap.flags.copy()
    flags[0, :] |= FLAG_BOUNDARY
    flags[-1, :] |= FLAG_BOUNDARY
    flags[:, 0] |= FLAG_BOUNDARY
    flags[:, -1] |= FLAG_BOUNDARY
    if min(phi.shape[:2]) <= 3:
        flags |= FLAG_BOUNDARY
    return C, flags


def leading_eigen(C: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Closed-form (lambda_max, lambda_min, eigenvector of lambda_max) for symmetric 2x2 C."""
    a = C[..., 0, 0]
    d = C[..., 1, 1]
    b = 0.5 * (C[..., 0, 1] + C[..., 1, 0])
    mid = 0.5 * (a + d)
    rad = np.sqrt((0.5 * (a - d)) ** 2 + b * b)
    lam_max = mid + rad
    lam_min = mid - rad

    vec = np.stack([b, lam_max - a], axis=-1)
    alt = np.stack([lam_max - d, b], axis=-1)
    use_alt = np.abs(a - lam_max) < np.abs(d - lam_max)
    vec = np.where(use_alt[..., None], alt, vec)
    nrm = np.linalg.norm(vec, axis=-1, keepdims=True)
    degenerate = nrm[..., 0] <= 1e-300
    vec = np.where(degenerate[..., None], np.array([1.0, 0.0]), vec / np.where(nrm > 0, nrm, 1.0))
    return lam_max, lam_min, vec


def ftle_field(C: np.ndarray, tau: float, flags: np.ndarray | None = None, grid: FtleGridSpec | None = None,
               dt: float = 0.0, with_eigenvectors: bool = False) -> FtleField:
    """sigma = log(lambda_max(C)) / (2|tau|) per node."""
    if tau == 0.0:
        raise ValueError("tau must be nonzero")
    lam_max, lam_min, vec = leading_eigen(C)
    tol = 1e-10 * np.maximum(1.0, np.abs(lam_max))
    bad = lam_min < -tol
    if np.any(bad):
        raise NegativeEigenvalue(f"Cauchy-Green tensor has a negative eigenvalue at {int(np.count_nonzero(bad))} nodes "
                                 f"(min {float(np.min(lam_min)):.3e})")
    with np.errstate(divide="ignore"):
        sigma = np.log(lam_max) / (2.0 * abs(tau))
    if flags is None:
        flags = np.zeros(sigma.shape, dtype=np.uint8)
    if grid is None:
        ny, nx = sigma.shape
        grid = FtleGridSpec((0.0, 1.0, 0.0, 1.0), (nx, ny), 0.0, tau)
    return FtleField(grid=grid, sigma=sigma, flags=flags, dt=dt,
                     eigenvectors=vec if with_eigenvectors else None)


def compute_ftle(flowmap: FlowMapField, dt: float = 0.0, with_eigenvectors: bool = False) -> FtleField:
    C, flags = cauchy_green(flowmap)
    return ftle_field(C, flowmap.grid.tau, flags, flowmap.grid, dt=dt, with_eigenvectors=with_eigenvectors)
