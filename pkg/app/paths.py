# FILE: app/paths.py
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from core.errors import MissingArtifact

APP_NAME = "rotorflow"

@dataclass(frozen=True)
class RunPaths:
    """File layout of one run directory."""
    root: Path

    @property
    def config(self) -> Path:
        return self.root / "config.json"

    @property
    def manifest(self) -> Path:
        return self.root / "manifest.json"

    @property
    def trajectory(self) -> Path:
        return self.root / "trajectory.csv"

    @property
    def controls(self) -> Path:
        return self.root / "controls.csv"

    @property
    def moments(self) -> Path:
        return self.root / "moments.csv"

    @property
    def cost_summary(self) -> Path:
        return self.root / "cost_summary.json"

    @property
    def convergence(self) -> Path:
        return self.root / "convergence.json"

    @property
    def policy(self) -> Path:
        return self.root / "policy.npz"

    @property
    def ensemble(self) -> Path:
        return self.root / "ensemble.csv"

    @property
    def histogram(self) -> Path:
        return self.root / "density_histogram.csv"

    @property
    def validation(self) -> Path:
        return self.root / "validation.json"

    @property
    def density_contours(self) -> Path:
        return self.root / "density_contours.csv"

    @property
    def mean_velocity(self) -> Path:
        return self.root / "mean_velocity.csv"

    @property
    def cost_table(self) -> Path:
        return self.root / "cost_table.csv"

    @property
    def sweep_failures(self) -> Path:
        return self.root / "sweep_failures.csv"

    def ftle_csv(self, direction: str) -> Path:
        return self.root / f"ftle_{direction}.csv"

    def ftle_grid(self, direction: str) -> Path:
        return self.root / f"ftle_{direction}.ftle"

    def ensure(self) -> "RunPaths":
        self.root.mkdir(parents=True, exist_ok=True)
        return self

    def require(self, *files: Path) -> None:
        missing = [p.name for p in files if not p.is_file()]
        if missing:
            raise MissingArtifact(f"run directory {self.root} lacks {', '.join(missing)}")

def default_run_dir(command: str, config_hash: str) -> Path:
    return Path("runs") / f"{command}-{config_hash[:12]}"
