# FILE: app/artifacts.py
from __future__ import annotations

import csv
import logging
import struct
import threading
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from app.config_store import load_json, save_json_atomic
from app.paths import RunPaths
from core.errors import ConfigError, MissingArtifact
from core.ftle.analysis import DensityOverlay
from core.ftle.field import FtleField
from core.flow.state import ControlMode

logger = logging.getLogger(__name__)

FTLE_MAGIC = b"FTLE"
FTLE_VERSION = 1
_FTLE_HEADER = struct.Struct("<4sI4d2I3d")

_manifest_lock = threading.Lock()


def _fmt(v: Any) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    return str(v)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    logger.debug("wrote %s", path)
    return path


def state_columns(n_r: int) -> list[str]:
    return ["x_p", "y_p"] + [f"x_r{i + 1}" for i in range(n_r)] + [f"y_r{i + 1}" for i in range(n_r)]


def control_columns(mode: ControlMode, n_r: int) -> list[str]:
    cols = [f"gamma_{i + 1}" for i in range(n_r)]
    if mode is ControlMode.VELOCITY:
        cols += [f"vx_{i + 1}" for i in range(n_r)] + [f"vy_{i + 1}" for i in range(n_r)]
    return cols


def write_trajectory(path: Path, dt: float, mean_states: np.ndarray, n_r: int) -> Path:
    return write_csv(path, ["t"] + state_columns(n_r),
                     ([t * dt, *row] for t, row in enumerate(np.asarray(mean_states))))


def write_controls(path: Path, dt: float, controls: np.ndarray, mode: ControlMode, n_r: int) -> Path:
    return write_csv(path, ["t"] + control_columns(mode, n_r),
                     ([t * dt, *row] for t, row in enumerate(np.asarray(controls))))


def read_controls(path: Path) -> np.ndarray:
    """Control table without the time column, shape (H-1, nc)."""
    if not path.is_file():
        raise MissingArtifact(f"{path} does not exist")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2 or not rows[0] or rows[0][0] != "t":
        raise ConfigError(f"{path} is not a control table", line=1)
    try:
        data = np.array([[float(v) for v in r[1:]] for r in rows[1:] if r], dtype=np.float64)
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from None
    return data


def write_moments(path: Path, dt: float, gpc: np.ndarray, mc: np.ndarray | None = None) -> Path:
    def rows():
        for t, m in enumerate(np.asarray(gpc)):
            yield [t * dt, *m, "gpc"]
        if mc is not None:
            for t, m in enumerate(np.asarray(mc)):
                yield [t * dt, *m, "mc"]

    return write_csv(path, ["t", "mu1", "mu2", "s11", "s22", "source"], rows())


def write_policy(path: Path, k: np.ndarray, K: np.ndarray, controls: np.ndarray, states: np.ndarray) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        np.savez(fh, k=k, K=K, controls=controls, states=states)
    return path


def write_ensemble(path: Path, dt: float, snapshots: dict[int, np.ndarray], flags: np.ndarray) -> Path:
    def rows():
        for t in sorted(snapshots):
            for pid, (x, y) in enumerate(snapshots[t]):
                yield [t * dt, pid, x, y, int(flags[pid])]

    return write_csv(path, ["t", "particle_id", "x", "y", "flag"], rows())


def write_histogram(path: Path, density: np.ndarray, x_edges: np.ndarray, y_edges: np.ndarray) -> Path:
    xc = 0.5 * (x_edges[1:] + x_edges[:-1])
    yc = 0.5 * (y_edges[1:] + y_edges[:-1])
    return write_csv(path, ["x", "y", "density"],
                     ([xc[ix], yc[iy], density[iy, ix]] for iy in range(len(yc)) for ix in range(len(xc))))


def write_ftle_csv(path: Path, field: FtleField) -> Path:
    pts = field.grid.points()
    ny, nx = field.sigma.shape
    has_vec = field.eigenvectors is not None
    header = ["x", "y", "sigma", "flag"] + (["ex", "ey"] if has_vec else [])

    def rows():
        for iy in range(ny):
            for ix in range(nx):
                row = [pts[iy, ix, 0], pts[iy, ix, 1], field.sigma[iy, ix], int(field.flags[iy, ix])]
                if has_vec:
                    row += list(field.eigenvectors[iy, ix])
                yield row

    return write_csv(path, header, rows())


def write_ftle_grid(path: Path, field: FtleField) -> Path:
    """Little-endian binary grid: header, sigma (ny*nx f64 row-major), flags (ny*nx u8)."""
    g = field.grid
    nx, ny = g.resolution
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        fh.write(_FTLE_HEADER.pack(FTLE_MAGIC, FTLE_VERSION, *g.domain, nx, ny, g.t0, g.tau, field.dt))
        fh.write(np.ascontiguousarray(field.sigma, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(field.flags, dtype=np.uint8).tobytes())
    return path


def read_ftle_grid(path: Path) -> tuple[dict[str, Any], np.ndarray, np.ndarray]:
    raw = path.read_bytes()
    if len(raw) < _FTLE_HEADER.size:
        raise ConfigError(f"{path} is too short for an FTLE grid")
    magic, version, x0, x1, y0, y1, nx, ny, t0, tau, dt = _FTLE_HEADER.unpack_from(raw)
    if magic != FTLE_MAGIC:
        raise ConfigError(f"{path} is not an FTLE grid")
    off = _FTLE_HEADER.size
    n = nx * ny
    sigma = np.frombuffer(raw, dtype="<f8", count=n, offset=off).reshape(ny, nx)
    flags = np.frombuffer(raw, dtype=np.uint8, count=n, offset=off + 8 * n).reshape(ny, nx)
    header = {"version": version, "domain": (x0, x1, y0, y1), "resolution": (nx, ny),
              "t0": t0, "tau": tau, "dt": dt}
    return header, sigma.copy(), flags.copy()


def write_density_contours(path: Path, overlay: DensityOverlay) -> Path:
    def rows():
        for c in overlay.contours:
            for seg, poly in enumerate(c.polylines):
                for x, y in poly:
                    yield [c.sigmas, c.level, seg, x, y]

    return write_csv(path, ["sigmas", "level", "segment", "x", "y"], rows())


def write_vector_field(path: Path, points: np.ndarray, vel: np.ndarray) -> Path:
    p = np.asarray(points).reshape(-1, 2)
    v = np.asarray(vel).reshape(-1, 2)
    return write_csv(path, ["x", "y", "u", "v"], ([*a, *b] for a, b in zip(p, v)))


def write_cost_table(path: Path, t_f_list: Sequence[float], n_r_list: Sequence[int], table: np.ndarray) -> Path:
    return write_csv(path, ["t_f"] + [f"n_r={n}" for n in n_r_list],
                     ([t_f, *table[i]] for i, t_f in enumerate(t_f_list)))


def write_sweep_failures(path: Path, failures: Sequence[tuple[float, int, str]]) -> Path:
    return write_csv(path, ["t_f", "n_r", "error"], failures)


def update_manifest(paths: RunPaths, command: str, config_hash: str, seed: int, artifacts: Iterable[Path]) -> Path:
    """Merge artifacts into manifest.json; writes are serialized within the process."""
    names = sorted({p.name for p in artifacts})
    with _manifest_lock:
        data: dict[str, Any] = {}
        if paths.manifest.is_file():
            data = load_json(paths.manifest)
        commands = list(data.get("commands", []))
        if command not in commands:
            commands.append(command)
        data.update({
            "tool": "rotorflow",
            "config_hash": config_hash,
            "seed": int(seed),
            "commands": commands,
            "artifacts": sorted(set(data.get("artifacts", [])) | set(names)),
        })
        save_json_atomic(paths.manifest, data)
    return paths.manifest
