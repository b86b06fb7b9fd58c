# FILE: app/cli.py
from __future__ import annotations

import argparse
import logging
from dataclasses import replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from app import artifacts
from app.config_store import key_line, load_config_dict, load_json, save_json_atomic
from app.logging_setup import configure_logging
from app.paths import APP_NAME, RunPaths, default_run_dir
from core.errors import ConfigError, MissingArtifact, NumericalError
from sim.config import RunConfig
from sim.ensemble import density_histogram
from sim.runner import (OptimizeOutcome, ValidationOutcome, run_ftle, run_optimize, run_simulate, run_sweep,
                        run_validate)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_MISSING = 4

# flag dest -> (section, key)
_OVERRIDES: dict[str, tuple[str, str]] = {
    "mode": ("scenario", "mode"),
    "n_r": ("scenario", "n_r"),
    "t_f": ("scenario", "t_f"),
    "dt": ("scenario", "dt"),
    "initial_mean": ("scenario", "initial_mean"),
    "initial_cov_scale": ("scenario", "initial_cov_scale"),
    "target_mean": ("scenario", "target_mean"),
    "target_var": ("scenario", "target_var"),
    "rotor_ring_radius": ("scenario", "rotor_ring_radius"),
    "eps": ("scenario", "eps"),
    "r_min": ("scenario", "r_min"),
    "gpc_degree": ("gpc", "degree"),
    "quad_points": ("gpc", "quad_points"),
    "alpha": ("weights", "alpha"),
    "max_iters": ("ddp", "max_iters"),
    "cost_tol": ("ddp", "cost_tol"),
    "hessian_mode": ("ddp", "hessian_mode"),
}

_SWEEP_OVERRIDES: dict[str, tuple[str, str]] = {
    "n_r_list": ("sweep", "n_r_list"),
    "t_f_list": ("sweep", "t_f_list"),
    "workers": ("sweep", "workers"),
    "n_particles": ("monte_carlo", "n_particles"),
}


def _add_scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON configuration file")
    p.add_argument("--out", type=Path, help="run directory (default runs/<command>-<hash>)")
    p.add_argument("--seed", type=int)
    g = p.add_argument_group("scenario overrides")
    g.add_argument("--mode", choices=("velocity", "torque"))
    g.add_argument("--n-r", dest="n_r", type=int)
    g.add_argument("--t-f", dest="t_f", type=float)
    g.add_argument("--dt", type=float)
    g.add_argument("--initial-mean", nargs=2, type=float, metavar=("X", "Y"))
    g.add_argument("--initial-cov-scale", type=float)
    g.add_argument("--target-mean", nargs=2, type=float, metavar=("X", "Y"))
    g.add_argument("--target-var", type=float)
    g.add_argument("--rotor-ring-radius", type=float)
    g.add_argument("--eps", type=float)
    g.add_argument("--r-min", dest="r_min", type=float)
    g.add_argument("--gpc-degree", type=int)
    g.add_argument("--quad-points", type=int)
    g.add_argument("--alpha", type=float, help="torque-mode control weight scale")
    g.add_argument("--max-iters", type=int)
    g.add_argument("--cost-tol", type=float)
    g.add_argument("--hessian-mode", choices=("gauss_newton", "full"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=APP_NAME,
        description="Steer particle distributions with microrotors: gPC + DDP optimization, "
                    "Monte Carlo validation and FTLE analysis.",
    )
    verb = parser.add_mutually_exclusive_group()
    verb.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verb.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="solve one scenario")
    _add_scenario_flags(p)

    p = sub.add_parser("sweep", help="optimize and validate every (t_f, n_r) cell")
    _add_scenario_flags(p)
    p.add_argument("--n-r-list", nargs="+", type=int)
    p.add_argument("--t-f-list", nargs="+", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--n", dest="n_particles", type=int, help="Monte Carlo particles per cell")

    p = sub.add_parser("validate", help="Monte Carlo check of a solved run")
    p.add_argument("--run", type=Path, required=True)
    p.add_argument("--n", dest="n_particles", type=int)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("ftle", help="forward and backward FTLE fields of a solved run")
    p.add_argument("--run", type=Path, required=True)
    p.add_argument("--t0", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--resolution", nargs=2, type=int, metavar=("NX", "NY"))
    p.add_argument("--domain", nargs=4, type=float, metavar=("XMIN", "XMAX", "YMIN", "YMAX"))
    p.add_argument("--eigenvectors", action="store_true", help="also write leading Cauchy-Green directions")

    p = sub.add_parser("simulate", help="open-loop rollout of a control table")
    _add_scenario_flags(p)
    p.add_argument("--controls", type=Path, required=True)
    p.add_argument("--mc", type=int, default=0, metavar="N", help="also advect N Monte Carlo particles")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """File values, then command-line overrides; errors are located in the file when possible."""
    data: dict[str, Any] = {}
    text = ""
    if getattr(args, "config", None) is not None:
        data, text = load_config_dict(args.config)
    overrides = dict(_OVERRIDES)
    if args.command == "sweep":
        overrides.update(_SWEEP_OVERRIDES)
    for dest, (section, key) in overrides.items():
        v = getattr(args, dest, None)
        if v is None:
            continue
        sec = data.setdefault(section, {})
        if not isinstance(sec, dict):
            raise ConfigError("expected an object", field=section, line=key_line(text, section))
        sec[key] = list(v) if isinstance(v, (list, tuple)) else v
    if getattr(args, "seed", None) is not None:
        data["seed"] = args.seed
    try:
        return RunConfig.from_dict(data)
    except ConfigError as e:
        if e.line is None and text:
            line = key_line(text, e.field)
            if line is not None:
                raise ConfigError(e.message, field=e.field, line=line) from None
        raise


def _run_paths(args: argparse.Namespace, cfg: RunConfig) -> RunPaths:
    root = args.out if args.out is not None else default_run_dir(args.command, cfg.config_hash())
    return RunPaths(Path(root)).ensure()


def _load_run(run_dir: Path) -> tuple[RunPaths, RunConfig, np.ndarray]:
    paths = RunPaths(Path(run_dir))
    paths.require(paths.config, paths.controls)
    cfg = RunConfig.from_dict(load_json(paths.config))
    return paths, cfg, artifacts.read_controls(paths.controls)


def _progress(pct: float, stage: str, done: int, total: int) -> None:
    logger.debug("%5.1f%% %s (%d/%d)", pct, stage, done, total)


def _cost_summary(cfg: RunConfig, moments: np.ndarray, gpc_cost: float, **extra: Any) -> dict[str, Any]:
    sc = cfg.scenario
    out = {
        "mode": sc.mode,
        "n_r": sc.n_r,
        "t_f": sc.t_f,
        "gpc_cost": float(gpc_cost),
        "final_moments": [float(v) for v in moments[-1]],
        "target": [*map(float, sc.target_mean), float(sc.target_var), float(sc.target_var)],
    }
    out.update(extra)
    return out


def _write_validation(paths: RunPaths, cfg: RunConfig, val: ValidationOutcome) -> list[Path]:
    dt = cfg.scenario.dt
    written = [artifacts.write_moments(paths.moments, dt, val.gpc_moments, val.mc_moments)]
    report = {
        "n_particles": val.n_particles,
        "seed": val.seed,
        "true_cost": val.true_cost,
        "gpc_cost": val.gpc_cost,
        "max_mean_gap_first_half": val.max_mean_gap_first_half,
        "variance_defined": val.variance_defined,
        "flagged_particles": int(np.count_nonzero(val.history.flags)),
    }
    save_json_atomic(paths.validation, report)
    written.append(paths.validation)
    if val.history.snapshots:
        written.append(artifacts.write_ensemble(paths.ensemble, dt, val.history.snapshots, val.history.flags))
    if val.history.final is not None:
        dens, xe, ye = density_histogram(val.history.final, cfg.monte_carlo.histogram_bins, cfg.ftle.domain)
        written.append(artifacts.write_histogram(paths.histogram, dens, xe, ye))
    return written


def cmd_optimize(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    paths = _run_paths(args, cfg)
    out: OptimizeOutcome = run_optimize(cfg, progress_cb=_progress)
    sc = cfg.scenario
    scen = out.scenario
    save_json_atomic(paths.config, cfg.to_dict())
    mean_states = out.states.reshape(out.states.shape[0], -1, scen.basis.size)[:, :, 0]
    written = [
        paths.config,
        artifacts.write_trajectory(paths.trajectory, sc.dt, mean_states, sc.n_r),
        artifacts.write_controls(paths.controls, sc.dt, out.controls, scen.mode, sc.n_r),
        artifacts.write_moments(paths.moments, sc.dt, out.moments),
        artifacts.write_policy(paths.policy, out.result.policy.k, out.result.policy.K, out.controls, out.states),
    ]
    report = out.result.report
    save_json_atomic(paths.cost_summary, _cost_summary(cfg, out.moments, out.result.trajectory.total_cost,
                                                       initial_cost=float(out.result.cost_history[0])))
    save_json_atomic(paths.convergence, {**report.to_dict(), "cost_history": list(map(float, out.result.cost_history))})
    written += [paths.cost_summary, paths.convergence]
    artifacts.update_manifest(paths, "optimize", cfg.config_hash(), cfg.seed, written)
    logger.info("optimize: wrote %d artifacts to %s", len(written), paths.root)
    if not report.converged:
        logger.error("optimize: no convergence (%s); best trajectory written", report.reason)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    paths = _run_paths(args, cfg)
    out = run_sweep(cfg, progress_cb=_progress)
    save_json_atomic(paths.config, cfg.to_dict())
    written = [paths.config, artifacts.write_cost_table(paths.cost_table, out.t_f_list, out.n_r_list, out.table())]
    if out.failures:
        written.append(artifacts.write_sweep_failures(paths.sweep_failures, out.failures))
    artifacts.update_manifest(paths, "sweep", cfg.config_hash(), cfg.seed, written)
    logger.info("sweep: %d cells solved, %d failed", len(out.costs), len(out.failures))
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    paths, cfg, controls = _load_run(args.run)
    val = run_validate(cfg, controls, n_particles=args.n_particles, seed=args.seed)
    written = _write_validation(paths, cfg, val)
    artifacts.update_manifest(paths, "validate", cfg.config_hash(), val.seed, written)
    return EXIT_OK


def cmd_ftle(args: argparse.Namespace) -> int:
    paths, cfg, controls = _load_run(args.run)
    if args.eigenvectors:
        cfg = replace(cfg, ftle=replace(cfg.ftle, eigenvectors=True))
    res = tuple(args.resolution) if args.resolution else None
    if res is not None and min(res) < 3:
        raise ConfigError("need at least 3 points per axis", field="ftle.resolution")
    dom = tuple(args.domain) if args.domain else None
    if dom is not None and not (dom[1] > dom[0] and dom[3] > dom[2]):
        raise ConfigError("domain must have positive extent", field="ftle.domain")
    if args.tau is not None and args.tau == 0.0:
        raise ConfigError("tau must be nonzero", field="ftle.tau")
    out = run_ftle(cfg, controls, t0=args.t0, tau=args.tau, resolution=res, domain=dom)
    written: list[Path] = []
    for direction, field in (("forward", out.analysis.forward), ("backward", out.analysis.backward)):
        written.append(artifacts.write_ftle_csv(paths.ftle_csv(direction), field))
        written.append(artifacts.write_ftle_grid(paths.ftle_grid(direction), field))
    written.append(artifacts.write_density_contours(paths.density_contours, out.analysis.overlay))
    written.append(artifacts.write_vector_field(paths.mean_velocity, out.grid.points(), out.mean_velocity))
    artifacts.update_manifest(paths, "ftle", cfg.config_hash(), cfg.seed, written)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    controls = artifacts.read_controls(args.controls)
    paths = _run_paths(args, cfg)
    out = run_simulate(cfg, controls, n_particles=args.mc, seed=args.seed)
    sc = cfg.scenario
    save_json_atomic(paths.config, cfg.to_dict())
    mean_states = out.states.reshape(out.states.shape[0], -1, out.scenario.basis.size)[:, :, 0]
    written = [
        paths.config,
        artifacts.write_trajectory(paths.trajectory, sc.dt, mean_states, sc.n_r),
        artifacts.write_controls(paths.controls, sc.dt, controls, out.scenario.mode, sc.n_r),
    ]
    extra: dict[str, Any] = {}
    if out.invariants is not None:
        extra["invariants_start"] = [float(v) for v in out.invariants[0]]
        extra["invariants_end"] = [float(v) for v in out.invariants[1]]
    if out.validation is not None:
        written += _write_validation(paths, cfg, out.validation)
        extra["true_cost"] = out.validation.true_cost
    else:
        written.append(artifacts.write_moments(paths.moments, sc.dt, out.moments))
    save_json_atomic(paths.cost_summary, _cost_summary(cfg, out.moments, out.gpc_cost, **extra))
    written.append(paths.cost_summary)
    seed = out.validation.seed if out.validation is not None else cfg.seed
    artifacts.update_manifest(paths, "simulate", cfg.config_hash(), seed, written)
    return EXIT_OK


_COMMANDS = {
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
    "ftle": cmd_ftle,
    "simulate": cmd_simulate,
}


def run_cli(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    configure_logging(1 if args.verbose else (-1 if args.quiet else 0))

    try:
        return _COMMANDS[args.command](args)
    except ConfigError as e:
        logger.error("configuration error: %s", e)
        return EXIT_CONFIG
    except MissingArtifact as e:
        logger.error("missing artifact: %s", e)
        return EXIT_MISSING
    except NumericalError as e:
        logger.error("numerical failure: %s", e)
        return EXIT_NUMERICAL
    except ValueError as e:
        logger.error("invalid input: %s", e)
        return EXIT_CONFIG
