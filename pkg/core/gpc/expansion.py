# FILE: core/gpc/expansion.py
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from core.errors import DimensionMismatch
from core.gpc.basis import HermiteBasis


@dataclass(frozen=True)
class GpcState:
    """
    Expansion coefficients, shape (n, K+1); entry (i, j) multiplies phi_j in
    state coordinate i. The flat form is row-major: l = i*(K+1) + j.
    """
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=np.float64)
        if c.ndim != 2:
            raise DimensionMismatch(f"coefficients must be 2-D, got shape {c.shape}")
        object.__setattr__(self, "coeffs", c)

    @property
    def n(self) -> int:
        return int(self.coeffs.shape[0])

    @property
    def n_terms(self) -> int:
        return int(self.coeffs.shape[1])

    @property
    def mean(self) -> np.ndarray:
        return self.coeffs[:, 0].copy()

    def flat(self) -> np.ndarray:
        return self.coeffs.ravel().copy()

    @staticmethod
    def from_flat(flat: np.ndarray, n: int) -> "GpcState":
        flat = np.asarray(flat, dtype=np.float64).reshape(-1)
        if flat.size % n:
            raise DimensionMismatch(f"{flat.size} coefficients do not split into {n} rows")
        return GpcState(flat.reshape(n, -1).copy())


@dataclass(frozen=True)
class MomentVector:
    mean: np.ndarray
    cov: np.ndarray


def project_gaussian_initial(mean: Sequence[float], stdev: Sequence[float],
                             deterministic_states: Sequence[float], basis: HermiteBasis) -> GpcState:
    """
    Exact expansion of x_i = mu_i + sigma_i Z_i for the stochastic rows (placed
    first), plus constant rows for the deterministic states.
    """
    mu = np.asarray(mean, dtype=np.float64).reshape(-1)
    sd = np.asarray(stdev, dtype=np.float64).reshape(-1)
    det = np.asarray(deterministic_states, dtype=np.float64).reshape(-1)
    if mu.size != basis.d or sd.size != basis.d:
        raise DimensionMismatch(
            f"basis has {basis.d} stochastic dimensions, got mean {mu.size} and stdev {sd.size}")
    if np.any(sd < 0.0):
        raise ValueError("standard deviations must be >= 0")

    X = np.zeros((basis.d + det.size, basis.size), dtype=np.float64)
    X[:basis.d, 0] = mu
    X[basis.d:, 0] = det
    for i in range(basis.d):
        if sd[i] == 0.0:
            continue
        if basis.r < 1:
            raise DimensionMismatch("a degree-0 basis cannot carry a nonzero variance")
        unit = tuple(1 if k == i else 0 for k in range(basis.d))
        X[i, basis.linear_index(unit)] = sd[i]
    return GpcState(X)


def moments(X: GpcState, basis: HermiteBasis) -> MomentVector:
    c = X.coeffs
    if c.shape[1] != basis.size:
        raise DimensionMismatch(f"state has {c.shape[1]} terms, basis has {basis.size}")
    hi = c[:, 1:]
    cov = (hi * basis.norms[1:]) @ hi.T
    return MomentVector(mean=c[:, 0].copy(), cov=0.5 * (cov + cov.T))


def reconstruct(X: GpcState, basis: HermiteBasis, z: np.ndarray) -> np.ndarray:
    """Physical states x(z) = sum_j X[:, j] phi_j(z) for z of shape (..., d)."""
    return basis.evaluate(z) @ X.coeffs.T
