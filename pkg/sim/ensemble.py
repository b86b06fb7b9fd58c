# FILE: sim/ensemble.py
from __future__ import annotations
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

# Keeps inverse-CDF arguments inside (0, 1).
_U_OFFSET = 2.0 ** -54

@dataclass(frozen=True)
class ParticleEnsemble:
    """
    N particle positions drawn from N(mean, diag(var)).
    Generator: numpy PCG64(seed); uniforms u = random() + 2^-54 mapped through
    the standard normal inverse CDF, first x then y for each particle.
    """
    points: np.ndarray  # (N, 2)
    seed: int

    @property
    def N(self) -> int:
        return int(self.points.shape[0])

def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))

def sample_initial(mean, cov, N: int, seed: int) -> ParticleEnsemble:
    if N < 1:
        raise ValueError("need at least one particle")
    mu = np.asarray(mean, dtype=np.float64).reshape(2)
    c = np.asarray(cov, dtype=np.float64)
    c = c * np.eye(2) if c.ndim == 0 else c.reshape(2, 2)
    if c[0, 1] != 0.0 or c[1, 0] != 0.0:
        raise ValueError("initial covariance must be diagonal")
    var = np.diag(c)
    if np.any(var < 0.0):
        raise ValueError("variances must be >= 0")

    u = rng_for(seed).random((int(N), 2)) + _U_OFFSET
    z = ndtri(u)
    return ParticleEnsemble(points=mu + z * np.sqrt(var), seed=int(seed))

def density_histogram(points: np.ndarray, bins: int, domain: tuple[float, float, float, float]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Normalized 2-D histogram (density, x_edges, y_edges); density is indexed [iy, ix]."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    ok = np.all(np.isfinite(pts), axis=1)
    H, xe, ye = np.histogram2d(pts[ok, 0], pts[ok, 1], bins=int(bins),
                               range=[[domain[0], domain[1]], [domain[2], domain[3]]])
    area = (xe[1] - xe[0]) * (ye[1] - ye[0])
    total = max(int(np.count_nonzero(ok)), 1)
    return H.T / (total * area), xe, ye
