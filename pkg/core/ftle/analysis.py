# FILE: core/ftle/analysis.py
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from matplotlib.figure import Figure
from scipy.spatial import cKDTree

from core.errors import WindowOutOfRange
from core.ftle.field import FtleField, compute_ftle
from core.ftle.flowmap import RotorHistoryFlow, flow_map
from core.ftle.grid import FtleGridSpec

logger = logging.getLogger(__name__)


@dataclass
class ContourLevel:
    sigmas: float              # distance from the initial mean in initial standard deviations
    level: float               # density value
    polylines: list[np.ndarray] = field(default_factory=list)


@dataclass
class DensityOverlay:
    density: np.ndarray        # (ny, nx) moment-matched Gaussian at t0
    contours: list[ContourLevel]

    def contour(self, sigmas: float) -> ContourLevel:
        for c in self.contours:
            if c.sigmas == sigmas:
                return c
        raise KeyError(sigmas)


@dataclass
class FtleAnalysis:
    forward: FtleField
    backward: FtleField
    overlay: DensityOverlay


def gaussian_density(points: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    cov = np.asarray(cov, dtype=np.float64)
    det = float(np.linalg.det(cov))
    if det <= 0.0:
        raise ValueError("density overlay needs a positive definite covariance")
    inv = np.linalg.inv(cov)
    d = np.asarray(points, dtype=np.float64) - np.asarray(mean, dtype=np.float64)
    q = np.einsum("...i,ij,...j->...", d, inv, d)
    return np.exp(-0.5 * q) / (2.0 * np.pi * np.sqrt(det))


def density_overlay(mean: np.ndarray, cov: np.ndarray, initial_cov: np.ndarray, grid: FtleGridSpec,
                    sigmas: tuple[float, ...] = (1.0, 2.0)) -> DensityOverlay:
    """
    Gaussian density with the given moments on the grid, contoured at the
    values the initial density takes k standard deviations from its mean.
    """
    dens = gaussian_density(grid.points(), mean, cov)
    peak0 = 1.0 / (2.0 * np.pi * np.sqrt(float(np.linalg.det(initial_cov))))
    levels = [(float(k), peak0 * float(np.exp(-0.5 * k * k))) for k in sigmas]

    ordered = sorted(levels, key=lambda kl: kl[1])
    fig = Figure()
    ax = fig.add_subplot()
    X, Y = np.meshgrid(grid.xs, grid.ys, indexing="xy")
    contours: dict[float, ContourLevel] = {k: ContourLevel(k, lv) for k, lv in levels}
    if float(np.max(dens)) > ordered[0][1]:
        cs = ax.contour(X, Y, dens, levels=[lv for _, lv in ordered])
        for (k, _), path in zip(ordered, cs.get_paths()):
            contours[k].polylines = [np.asarray(p, dtype=np.float64)
                                     for p in path.to_polygons(closed_only=False) if len(p) > 1]
    return DensityOverlay(density=dens, contours=[contours[k] for k, _ in levels])


def ridge_adjacency(forward: FtleField, overlay: DensityOverlay, radius: float = 0.25,
                    percentile: float = 95.0, sigmas: float = 2.0) -> bool:
    """True when some node at or above the given sigma percentile lies within radius of the density contour."""
    ok = (forward.flags == 0) & np.isfinite(forward.sigma)
    if not np.any(ok):
        return False
    level = float(np.percentile(forward.sigma[ok], percentile))
    ridge = forward.grid.points()[ok & (forward.sigma >= level)]
    polys = overlay.contour(sigmas).polylines
    if not polys or ridge.size == 0:
        return False
    tree = cKDTree(ridge)
    dist, _ = tree.query(np.concatenate(polys, axis=0), k=1, distance_upper_bound=radius)
    return bool(np.any(np.isfinite(dist)))


def time_averaged_velocity(flow: RotorHistoryFlow, points: np.ndarray, t_start: float | None = None,
                           t_end: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Mean of the replayed field over whole segments in [t_start, t_end]; returns (velocity, near)."""
    t_start = flow.t_start if t_start is None else t_start
    t_end = flow.t_end if t_end is None else t_end
    s0 = int(round((t_start - flow.t_start) / flow.dt))
    s1 = int(round((t_end - flow.t_start) / flow.dt))
    if s0 < 0 or s1 > flow.n_segments or s1 <= s0:
        raise WindowOutOfRange(f"[{t_start}, {t_end}] is outside the stored history")
    pts = np.asarray(points, dtype=np.float64)
    acc = np.zeros(pts.shape, dtype=np.float64)
    near = np.zeros(pts.shape[:-1], dtype=bool)
    for s in range(s0, s1):
        v, nr = flow.velocity(pts, s)
        acc += v
        near |= nr
    return acc / (s1 - s0), near


def analyze_solution(flow: RotorHistoryFlow, particle_mean: np.ndarray, particle_cov: np.ndarray,
                     t0: float, tau: float, grid: FtleGridSpec, dt: float,
                     bbox_scale: float = 4.0, with_eigenvectors: bool = False) -> FtleAnalysis:
    """
    Forward (+|tau|) and backward (-|tau|) FTLE fields of a replayed solution
    from t0, plus the density overlay at t0. particle_mean (H, 2) and
    particle_cov (H, 2, 2) are sampled on the stored step grid.
    """
    span = abs(float(tau))
    if t0 - span < flow.t_start - 1e-9 or t0 + span > flow.t_end + 1e-9:
        raise WindowOutOfRange(f"window {t0} +/- {span} outside [{flow.t_start}, {flow.t_end}]")
    fwd_grid = FtleGridSpec(grid.domain, grid.resolution, t0, span)
    bwd_grid = fwd_grid.with_tau(-span)
    logger.info("FTLE: %dx%d grid, t0=%.3f, tau=+/-%.3f", grid.resolution[0], grid.resolution[1], t0, span)
    forward = compute_ftle(flow_map(fwd_grid, flow, dt, bbox_scale), dt, with_eigenvectors)
    backward = compute_ftle(flow_map(bwd_grid, flow, dt, bbox_scale), dt, with_eigenvectors)

    i0 = int(round((t0 - flow.t_start) / flow.dt))
    overlay = density_overlay(np.asarray(particle_mean)[i0], np.asarray(particle_cov)[i0],
                              np.asarray(particle_cov)[0], fwd_grid)
    return FtleAnalysis(forward=forward, backward=backward, overlay=overlay)
