"""Field persistence: the IVF1 binary format and legacy-VTK structured points.

IVF1 layout: one ASCII header line
``IVF1 nx ny nz_paper nz_reservoir cell_size field_name`` then
``nx*ny*(nz_paper+nz_reservoir)`` bytes (0x00/0x01), x fastest, then y, then
z ascending.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .lattice import Grid, check_field

__all__ = ["write_ivf", "read_ivf", "write_vtk"]

MAGIC = "IVF1"


def write_ivf(path: str | Path, field: np.ndarray, grid: Grid, name: str) -> None:
    field = check_field(field, grid, name)
    if not name or any(c.isspace() for c in name):
        raise ValueError(f"field name must be a non-empty token, got {name!r}")
    if not np.isin(field, (0, 1)).all():
        raise ValueError(f"{name} is not binary")
    header = f"{MAGIC} {grid.nx} {grid.ny} {grid.nz_paper} {grid.nz_reservoir} {grid.cell_size!r} {name}\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(np.ascontiguousarray(field, dtype=np.uint8).tobytes())


def read_ivf(path: str | Path) -> tuple[np.ndarray, Grid, str]:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        payload = fh.read()
    if len(header) != 7 or header[0] != MAGIC:
        raise ValueError(f"{path}: not an IVF1 file")
    nx, ny, nzp, nzr = (int(v) for v in header[1:5])
    grid = Grid(nx, ny, nzp, nzr, float(header[5]))
    if len(payload) != grid.n_cells:
        raise ValueError(f"{path}: expected {grid.n_cells} bytes of data, found {len(payload)}")
    field = np.frombuffer(payload, dtype=np.uint8).reshape(grid.shape).copy()
    if field.max(initial=0) > 1:
        raise ValueError(f"{path}: field bytes must be 0 or 1")
    return field, grid, header[6]


def write_vtk(path: str | Path, field: np.ndarray, grid: Grid, name: str) -> None:
    """One scalar cell field as ASCII legacy-VTK STRUCTURED_POINTS."""
    field = check_field(field, grid, name)
    cs = grid.cell_size
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"inkseep {name}\n")
        fh.write("ASCII\nDATASET STRUCTURED_POINTS\n")
        fh.write(f"DIMENSIONS {grid.nx + 1} {grid.ny + 1} {grid.nz + 1}\n")
        fh.write(f"ORIGIN 0 0 {-grid.nz_reservoir * cs!r}\n")
        fh.write(f"SPACING {cs!r} {cs!r} {cs!r}\n")
        fh.write(f"CELL_DATA {grid.n_cells}\n")
        fh.write(f"SCALARS {name} unsigned_char 1\nLOOKUP_TABLE default\n")
        flat = np.asarray(field, dtype=np.uint8).ravel()
        for start in range(0, len(flat), grid.nx):
            fh.write(" ".join(map(str, flat[start:start + grid.nx])) + "\n")
