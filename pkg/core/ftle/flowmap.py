# FILE: core/ftle/flowmap.py
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from core.errors import WindowOutOfRange
from core.flow.integrate import rk4_step
from core.flow.rotlet import DEFAULT_R_MIN, velocity_field
from core.ftle.grid import FLAG_LEFT_BOX, FLAG_NEAR_ROTOR, FtleGridSpec

logger = logging.getLogger(__name__)

_NO_CONTROL = np.zeros(0)


class FlowSource(Protocol):
    """
    Velocity field frozen over stored segments of length dt starting at
    t_start; n_segments is None for a steady field.
    """
    t_start: float
    dt: float
    n_segments: int | None

    def velocity(self, points: np.ndarray, segment: int) -> tuple[np.ndarray, np.ndarray]: ...


class SteadyFlow:
    def __init__(self, field: Callable[[np.ndarray], np.ndarray], dt: float = 0.01):
        self.field = field
        self.t_start = 0.0
        self.dt = float(dt)
        self.n_segments = None

    def velocity(self, points: np.ndarray, segment: int) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.field(points), dtype=np.float64), np.zeros(points.shape[:-1], dtype=bool)


class RotorHistoryFlow:
    """
    Superposed rotlet field replaying stored rotor positions and strengths,
    zero-order hold per segment: segment s uses positions[s] and strengths[s].
    """

    def __init__(self, segment_positions: np.ndarray, strengths: np.ndarray, dt: float,
                 t_start: float = 0.0, eps: float = 0.0, r_min: float = DEFAULT_R_MIN):
        pos = np.asarray(segment_positions, dtype=np.float64)
        g = np.asarray(strengths, dtype=np.float64)
        if pos.ndim != 3 or pos.shape[-1] != 2 or g.shape != pos.shape[:2]:
            raise ValueError(f"positions {pos.shape} and strengths {g.shape} do not describe the same segments")
        self.positions = pos
        self.strengths = g
        self.dt = float(dt)
        self.t_start = float(t_start)
        self.eps = float(eps)
        self.r_min = float(r_min)
        self.n_segments = int(pos.shape[0])

    @staticmethod
    def from_paths(rotor_paths: np.ndarray, strengths: np.ndarray, dt: float,
                   eps: float = 0.0, r_min: float = DEFAULT_R_MIN) -> "RotorHistoryFlow":
        """rotor_paths (H, n_r, 2) at the step boundaries, strengths (H-1, n_r)."""
        paths = np.asarray(rotor_paths, dtype=np.float64)
        return RotorHistoryFlow(paths[:-1], strengths, dt, eps=eps, r_min=r_min)

    @property
    def t_end(self) -> float:
        return self.t_start + self.n_segments * self.dt

    def reversed(self) -> "RotorHistoryFlow":
        """Time-reversed playback: segments in reverse order with negated strengths."""
        return RotorHistoryFlow(self.positions[::-1].copy(), -self.strengths[::-1], self.dt,
                                t_start=self.t_start, eps=self.eps, r_min=self.r_min)

    def velocity(self, points: np.ndarray, segment: int) -> tuple[np.ndarray, np.ndarray]:
        return velocity_field(points, self.positions[segment], self.strengths[segment],
                              eps=self.eps, r_min=self.r_min, guard=True)


@dataclass
class FlowMapField:
    grid: FtleGridSpec
    positions: np.ndarray   # (ny, nx, 2)
    flags: np.ndarray       # (ny, nx) uint8


def _segment_plan(grid: FtleGridSpec, source: FlowSource, dt: float) -> list[int]:
    n_steps = int(round(abs(grid.tau) / dt))
    if n_steps < 1 or abs(n_steps * dt - abs(grid.tau)) > 1e-9 * max(1.0, abs(grid.tau)):
        raise ValueError(f"|tau|={abs(grid.tau)} is not a whole number of steps of {dt}")
    if source.n_segments is None:
        return [0] * n_steps

    sub = source.dt / dt
    m = int(round(sub))
    if m < 1 or abs(sub - m) > 1e-9 * m:
        raise ValueError(f"integration dt {dt} must divide the stored step {source.dt}")
    i0f = (grid.t0 - source.t_start) / dt
    i0 = int(round(i0f))
    if abs(i0f - i0) > 1e-6:
        raise WindowOutOfRange(f"t0={grid.t0} is not on the integration grid")
    total = source.n_segments * m
    if grid.tau > 0:
        if i0 < 0 or i0 + n_steps > total:
            raise WindowOutOfRange(
                f"window [{grid.t0}, {grid.t0 + grid.tau}] leaves the stored history "
                f"[{source.t_start}, {source.t_start + source.n_segments * source.dt}]")
        return [(i0 + k) // m for k in range(n_steps)]
    if i0 > total or i0 - n_steps < 0:
        raise WindowOutOfRange(
            f"window [{grid.t0 + grid.tau}, {grid.t0}] leaves the stored history "
            f"[{source.t_start}, {source.t_start + source.n_segments * source.dt}]")
    return [(i0 - k - 1) // m for k in range(n_steps)]


def flow_map(grid: FtleGridSpec, source: FlowSource, dt: float, bbox_scale: float = 4.0) -> FlowMapField:
    """
    RK4 tracers from every grid node over [t0, t0 + tau]. Negative tau runs the
    stored segments backward with negated velocity. Tracers leaving the
    bounding box are frozen at their last position inside it.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    plan = _segment_plan(grid, source, dt)
    sign = 1.0 if grid.tau > 0 else -1.0
    bx0, bx1, by0, by1 = grid.bounding_box(bbox_scale)

    pts = grid.points().reshape(-1, 2).copy()
    flags = np.zeros(pts.shape[0], dtype=np.uint8)
    active = np.ones(pts.shape[0], dtype=bool)

    for seg in plan:
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        near_acc = np.zeros(idx.size, dtype=bool)

        def vel(p: np.ndarray, _u: np.ndarray, seg: int = seg) -> np.ndarray:
            v, near = source.velocity(p, seg)
            near_acc[:] |= near
            return sign * v

        new = rk4_step(vel, pts[idx], _NO_CONTROL, dt)
        flags[idx[near_acc]] |= FLAG_NEAR_ROTOR
        out = ~((new[:, 0] >= bx0) & (new[:, 0] <= bx1) & (new[:, 1] >= by0) & (new[:, 1] <= by1))
        out |= ~np.all(np.isfinite(new), axis=-1)
        keep = idx[~out]
        pts[keep] = new[~out]
        left = idx[out]
        flags[left] |= FLAG_LEFT_BOX
        active[left] = False

    n_left = int(np.count_nonzero(flags & FLAG_LEFT_BOX))
    if n_left:
        logger.info("flow map: %d tracers left the bounding box and were frozen", n_left)
    nx, ny = grid.resolution
    return FlowMapField(grid=grid, positions=pts.reshape(ny, nx, 2), flags=flags.reshape(ny, nx))
