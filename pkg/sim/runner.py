# FILE: sim/runner.py
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from core.ddp.solver import solve
from core.ddp.types import SolveResult
from core.errors import DimensionMismatch, RotorflowError
from core.flow.state import ControlMode
from core.flow.systems import point_vortex_invariants
from core.ftle.analysis import FtleAnalysis, analyze_solution, ridge_adjacency, time_averaged_velocity
from core.ftle.flowmap import RotorHistoryFlow
from core.ftle.grid import FtleGridSpec
from sim.config import RunConfig
from sim.ensemble import sample_initial
from sim.monte_carlo import EnsembleHistory, advect, true_cost
from sim.scenario import Scenario, build_scenario

logger = logging.getLogger(__name__)

ProgressCb = Callable[[float, str, int, int], None]


@dataclass
class OptimizeOutcome:
    scenario: Scenario
    result: SolveResult
    moments: np.ndarray   # (H, 4)

    @property
    def controls(self) -> np.ndarray:
        return self.result.trajectory.controls

    @property
    def states(self) -> np.ndarray:
        return self.result.trajectory.states


@dataclass
class ValidationOutcome:
    history: EnsembleHistory
    gpc_moments: np.ndarray   # (H, 4)
    mc_moments: np.ndarray    # (H, 4)
    true_cost: float
    gpc_cost: float
    max_mean_gap_first_half: float
    n_particles: int
    seed: int

    @property
    def variance_defined(self) -> bool:
        return self.n_particles >= 2


@dataclass
class SweepOutcome:
    n_r_list: tuple[int, ...]
    t_f_list: tuple[float, ...]
    costs: dict[tuple[float, int], float] = field(default_factory=dict)
    failures: list[tuple[float, int, str]] = field(default_factory=list)

    def table(self) -> np.ndarray:
        """(len(t_f_list), len(n_r_list)) with NaN for failed cells."""
        out = np.full((len(self.t_f_list), len(self.n_r_list)), np.nan)
        for i, t_f in enumerate(self.t_f_list):
            for j, n_r in enumerate(self.n_r_list):
                out[i, j] = self.costs.get((t_f, n_r), np.nan)
        return out


@dataclass
class FtleOutcome:
    analysis: FtleAnalysis
    ridge_adjacent: bool
    mean_velocity: np.ndarray   # (ny, nx, 2) over the FTLE window
    grid: FtleGridSpec


@dataclass
class SimulateOutcome:
    scenario: Scenario
    states: np.ndarray
    moments: np.ndarray
    gpc_cost: float
    invariants: np.ndarray | None = None   # (2, 4) start/end, torque mode only
    validation: ValidationOutcome | None = None


def run_optimize(cfg: RunConfig, progress_cb: ProgressCb | None = None,
                 stop_flag: Callable[[], bool] | None = None) -> OptimizeOutcome:
    scen = build_scenario(cfg)
    sc = cfg.scenario
    logger.info("optimize: mode=%s n_r=%d t_f=%g dt=%g gPC degree=%d (%d coefficients)",
                sc.mode, sc.n_r, sc.t_f, sc.dt, cfg.gpc.degree, scen.model.dim)
    result = solve(scen.problem, cfg.ddp.options(), progress_cb=progress_cb, stop_flag=stop_flag)
    if progress_cb is not None:
        progress_cb(100.0, "done", result.report.iterations, cfg.ddp.max_iters)
    return OptimizeOutcome(scenario=scen, result=result, moments=scen.moment_vectors(result.trajectory.states))


def _checked_controls(scen: Scenario, controls: np.ndarray) -> np.ndarray:
    ctrl = np.asarray(controls, dtype=np.float64)
    expected = (scen.horizon - 1, scen.system.n_c)
    if ctrl.shape != expected:
        raise DimensionMismatch(f"control table has shape {ctrl.shape}, scenario needs {expected}")
    return ctrl


def run_validate(cfg: RunConfig, controls: np.ndarray, n_particles: int | None = None, seed: int | None = None,
                 scenario: Scenario | None = None) -> ValidationOutcome:
    """Advect a sampled ensemble under stored controls and compare with the gPC moments."""
    scen = scenario or build_scenario(cfg)
    ctrl = _checked_controls(scen, controls)
    sc = cfg.scenario
    N = int(n_particles or cfg.monte_carlo.n_particles)
    seed = cfg.seed if seed is None else int(seed)

    states = scen.model.propagate(scen.X0.flat(), ctrl, sc.dt)
    gpc_m = scen.moment_vectors(states)
    gpc_cost = float(sum(scen.cost.stage(states[t], ctrl[t]) for t in range(len(ctrl)))
                     + scen.cost.terminal(states[-1]))

    ens = sample_initial(sc.initial_mean, sc.initial_cov_scale * np.eye(2), N, seed)
    logger.info("validate: %d particles, seed %d", N, seed)
    hist = advect(ens, scen.rotor_paths(states), ctrl, sc.dt, scen.mode, eps=sc.eps, r_min=sc.r_min,
                  snapshot_stride=cfg.monte_carlo.snapshot_stride)
    mc_m = hist.moment_vectors()
    half = max(1, scen.horizon // 2)
    gap = float(np.max(np.abs(gpc_m[:half, :2] - mc_m[:half, :2])))
    tc = true_cost(hist, ctrl, scen.weights, scen.target)
    logger.info("validate: true cost %.6g (gPC %.6g), max mean gap over first half %.4g", tc, gpc_cost, gap)
    return ValidationOutcome(history=hist, gpc_moments=gpc_m, mc_moments=mc_m, true_cost=tc, gpc_cost=gpc_cost,
                             max_mean_gap_first_half=gap, n_particles=N, seed=seed)


def _sweep_cell(cfg_dict: dict[str, Any], n_r: int, t_f: float) -> tuple[float | None, str | None]:
    try:
        cfg = RunConfig.from_dict(cfg_dict).with_scenario(n_r=int(n_r), t_f=float(t_f))
        out = run_optimize(cfg)
        val = run_validate(cfg, out.controls, scenario=out.scenario)
        return val.true_cost, None
    except (RotorflowError, np.linalg.LinAlgError, FloatingPointError, ValueError) as e:
        return None, f"{type(e).__name__}: {e}"


def run_sweep(cfg: RunConfig, n_r_list: tuple[int, ...] | None = None, t_f_list: tuple[float, ...] | None = None,
              workers: int | None = None, progress_cb: ProgressCb | None = None,
              stop_flag: Callable[[], bool] | None = None) -> SweepOutcome:
    """
    Optimize and Monte Carlo validate every (t_f, n_r) cell. Cells are
    independent; results are collected in submission order.
    """
    n_rs = tuple(n_r_list or cfg.sweep.n_r_list)
    t_fs = tuple(float(v) for v in (t_f_list or cfg.sweep.t_f_list))
    if not n_rs or not t_fs:
        raise ValueError("sweep lists must be non-empty")
    workers = int(workers or cfg.sweep.workers)
    cells = [(t_f, n_r) for t_f in t_fs for n_r in n_rs]
    outcome = SweepOutcome(n_r_list=n_rs, t_f_list=t_fs)
    cfg_dict = cfg.to_dict()
    total = len(cells)

    def record(i: int, cell: tuple[float, int], res: tuple[float | None, str | None]) -> None:
        cost, err = res
        if err is None and cost is not None:
            outcome.costs[cell] = cost
            logger.info("sweep cell t_f=%g n_r=%d: true cost %.6g", cell[0], cell[1], cost)
        else:
            outcome.failures.append((cell[0], cell[1], err or "unknown failure"))
            logger.warning("sweep cell t_f=%g n_r=%d failed: %s", cell[0], cell[1], err)
        if progress_cb is not None:
            progress_cb(100.0 * (i + 1) / total, f"t_f={cell[0]:g} n_r={cell[1]}", i + 1, total)

    if workers <= 1:
        for i, cell in enumerate(cells):
            if stop_flag is not None and stop_flag():
                break
            record(i, cell, _sweep_cell(cfg_dict, cell[1], cell[0]))
        return outcome

    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_sweep_cell, cfg_dict, n_r, t_f) for t_f, n_r in cells]
        for i, (cell, fut) in enumerate(zip(cells, futures)):
            if stop_flag is not None and stop_flag():
                for f in futures[i:]:
                    f.cancel()
                break
            record(i, cell, fut.result())
    return outcome


def run_ftle(cfg: RunConfig, controls: np.ndarray, t0: float | None = None, tau: float | None = None,
             resolution: tuple[int, int] | None = None,
             domain: tuple[float, float, float, float] | None = None,
             scenario: Scenario | None = None) -> FtleOutcome:
    scen = scenario or build_scenario(cfg)
    ctrl = _checked_controls(scen, controls)
    fc = cfg.ftle
    t0 = fc.t0 if t0 is None else float(t0)
    tau = fc.tau if tau is None else float(tau)
    grid = FtleGridSpec(tuple(domain or fc.domain), tuple(resolution or fc.resolution), t0, abs(tau))

    states = scen.model.propagate(scen.X0.flat(), ctrl, scen.dt)
    flow = RotorHistoryFlow.from_paths(scen.rotor_paths(states), ctrl[:, :scen.n_r], scen.dt,
                                       eps=cfg.scenario.eps, r_min=cfg.scenario.r_min)
    means, covs = scen.particle_moments(states)
    analysis = analyze_solution(flow, means, covs, t0, tau, grid, fc.dt, bbox_scale=fc.bbox_scale,
                                with_eigenvectors=fc.eigenvectors)
    adjacent = ridge_adjacency(analysis.forward, analysis.overlay, radius=fc.ridge_radius)
    mean_vel, _ = time_averaged_velocity(flow, grid.points(), t0 - abs(tau), t0 + abs(tau))
    logger.info("ftle: ridge adjacent to 2-sigma density contour: %s", adjacent)
    return FtleOutcome(analysis=analysis, ridge_adjacent=adjacent, mean_velocity=mean_vel, grid=grid)


def run_simulate(cfg: RunConfig, controls: np.ndarray, n_particles: int = 0,
                 seed: int | None = None) -> SimulateOutcome:
    """Open-loop rollout of a control table, with an optional Monte Carlo comparison."""
    scen = build_scenario(cfg)
    ctrl = _checked_controls(scen, controls)
    states = scen.model.propagate(scen.X0.flat(), ctrl, scen.dt)
    cost = float(sum(scen.cost.stage(states[t], ctrl[t]) for t in range(len(ctrl)))
                 + scen.cost.terminal(states[-1]))

    inv = None
    if scen.mode is ControlMode.TORQUE:
        paths = scen.rotor_paths(states)
        if np.allclose(ctrl, ctrl[0]):
            inv = np.stack([point_vortex_invariants(paths[0], ctrl[0]),
                            point_vortex_invariants(paths[-1], ctrl[-1])])
    val = run_validate(cfg, ctrl, n_particles, seed, scenario=scen) if n_particles > 0 else None
    return SimulateOutcome(scenario=scen, states=states, moments=scen.moment_vectors(states), gpc_cost=cost,
                           invariants=inv, validation=val)
