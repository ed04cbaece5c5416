"""Post-solve diagnostics: volume error, saturation profiles, fiber confinement."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .energy import EnergyParams
from .lattice import Grid, check_field, neighbor_sum

__all__ = [
    "ProfileRow",
    "SaturationProfile",
    "volume_error",
    "saturation_profile",
    "fiber_adjacency_fraction",
    "fill_fraction",
]


@dataclass(frozen=True)
class ProfileRow:
    layer: int
    z: float
    free_cells: int
    ink_cells: int
    saturation: float


@dataclass(frozen=True)
class SaturationProfile:
    rows: tuple[ProfileRow, ...]

    @property
    def saturation(self) -> np.ndarray:
        return np.array([r.saturation for r in self.rows])

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["layer", "z", "free_cells", "ink_cells", "saturation"])
            for r in self.rows:
                w.writerow([r.layer, repr(r.z), r.free_cells, r.ink_cells, repr(r.saturation)])


def volume_error(sigma: np.ndarray, params: EnergyParams) -> int:
    """|V_fluid - V_fluid0| in cells."""
    return abs(int(np.count_nonzero(sigma)) - int(round(params.V_fluid0)))


def saturation_profile(sigma: np.ndarray, phi: np.ndarray, grid: Grid) -> SaturationProfile:
    sigma = check_field(sigma, grid, "sigma").astype(bool)
    phi = check_field(phi, grid, "phi").astype(bool)
    free = (~phi).sum(axis=(1, 2))
    ink = (sigma & ~phi).sum(axis=(1, 2))
    rows = tuple(
        ProfileRow(k, float(grid.z_layers[k]), int(free[k]), int(ink[k]),
                   float(ink[k] / free[k]) if free[k] else 0.0)
        for k in range(grid.nz)
    )
    return SaturationProfile(rows)


def fiber_adjacency_fraction(sigma: np.ndarray, phi: np.ndarray, grid: Grid) -> float:
    """Share of ink cells with at least one solid N1 neighbor (0 without ink)."""
    sigma = check_field(sigma, grid, "sigma").astype(bool)
    phi = check_field(phi, grid, "phi")
    n = int(sigma.sum())
    if n == 0:
        return 0.0
    touching = neighbor_sum(phi, 1) > 0
    return float((sigma & touching).sum()) / n


def fill_fraction(sigma: np.ndarray, phi: np.ndarray, grid: Grid, *, paper_only: bool = True) -> float:
    """Share of free (non-fiber) cells holding ink."""
    sigma = check_field(sigma, grid, "sigma").astype(bool)
    free = check_field(phi, grid, "phi") == 0
    if paper_only:
        free = free & ~grid.reservoir_mask
    total = int(free.sum())
    return float((sigma & free).sum()) / total if total else 0.0
