# FILE: core/gpc/quadrature.py
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite_e import hermegauss


@dataclass(frozen=True)
class QuadratureRule:
    """Tensor Gauss-Hermite rule; weights sum to one (standard normal density)."""
    nodes: np.ndarray     # (Q^d, d)
    weights: np.ndarray   # (Q^d,)
    points_per_dim: int

    @property
    def size(self) -> int:
        return int(self.weights.shape[0])

    @property
    def d(self) -> int:
        return int(self.nodes.shape[1])

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Weighted sum over the leading node axis."""
        return np.tensordot(self.weights, np.asarray(values, dtype=np.float64), axes=(0, 0))


def build_quadrature(d: int, Q: int) -> QuadratureRule:
    if d < 1:
        raise ValueError("stochastic dimension must be >= 1")
    if Q < 1:
        raise ValueError("need at least one point per dimension")
    z1, w1 = hermegauss(int(Q))
    w1 = w1 / np.sum(w1)

    grids = np.meshgrid(*([z1] * d), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=-1)
    wgrids = np.meshgrid(*([w1] * d), indexing="ij")
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    return QuadratureRule(nodes=nodes.astype(np.float64), weights=weights.astype(np.float64), points_per_dim=int(Q))
