"""Discretized computational space: paper layers on top of reservoir layers.

Fields live in numpy arrays of shape ``(nz, ny, nx)`` so that the C-order
flat index is ``i = ix + nx * (iy + ny * iz)`` (x fastest, then y, then z).
Layer ``iz = 0`` is the deepest reservoir layer; the first paper layer is
``iz = nz_reservoir``. All z-coordinates are cell centers.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import product

import numpy as np
from scipy import ndimage

__all__ = [
    "Grid",
    "make_grid",
    "n1_neighbors",
    "n2_neighbors",
    "N1_OFFSETS",
    "N2_OFFSETS",
    "n1_kernel",
    "n2_kernel",
    "neighbor_sum",
    "neighbor_counts",
    "new_field",
    "check_field",
]


def _offsets(radius: int) -> tuple[tuple[int, int, int], ...]:
    # (dz, dy, dx) with Chebyshev norm exactly `radius`, ascending flat order
    return tuple(
        o for o in product(range(-radius, radius + 1), repeat=3)
        if max(abs(c) for c in o) == radius
    )


N1_OFFSETS = _offsets(1)
N2_OFFSETS = _offsets(2)


def n1_kernel() -> np.ndarray:
    k = np.ones((3, 3, 3), dtype=np.int64)
    k[1, 1, 1] = 0
    return k


def n2_kernel() -> np.ndarray:
    k = np.ones((5, 5, 5), dtype=np.int64)
    k[1:4, 1:4, 1:4] = 0
    return k


_N1_KERNEL = n1_kernel()
_N2_KERNEL = n2_kernel()


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    nz_paper: int
    nz_reservoir: int = 0
    cell_size: float = 1.0

    def __post_init__(self):
        for name in ("nx", "ny", "nz_paper"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if int(self.nz_reservoir) != self.nz_reservoir or self.nz_reservoir < 0:
            raise ValueError(f"nz_reservoir must be a non-negative integer, got {self.nz_reservoir!r}")
        if not self.cell_size > 0:
            raise ValueError(f"cell_size must be positive, got {self.cell_size!r}")

    @property
    def nz(self) -> int:
        return self.nz_paper + self.nz_reservoir

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nz, self.ny, self.nx)

    @property
    def n_cells(self) -> int:
        """Total cell count V0, reservoir included."""
        return self.nx * self.ny * self.nz

    @property
    def layer_size(self) -> int:
        return self.nx * self.ny

    def z_of_layer(self, iz: int) -> float:
        if not 0 <= iz < self.nz:
            raise ValueError(f"layer {iz} outside [0, {self.nz})")
        return (iz - self.nz_reservoir + 0.5) * self.cell_size

    @cached_property
    def z_layers(self) -> np.ndarray:
        return (np.arange(self.nz) - self.nz_reservoir + 0.5) * self.cell_size

    @cached_property
    def z(self) -> np.ndarray:
        """Per-cell z-coordinate, broadcast to the field shape."""
        return np.broadcast_to(self.z_layers[:, None, None], self.shape)

    @property
    def z_max(self) -> float:
        return float(self.z_layers[-1])

    @cached_property
    def reservoir_mask(self) -> np.ndarray:
        m = np.zeros(self.shape, dtype=bool)
        m[: self.nz_reservoir] = True
        return m

    @cached_property
    def n1_count(self) -> np.ndarray:
        """Clipped ``|N1(i)|`` per cell."""
        return neighbor_sum(np.ones(self.shape, dtype=np.int64), 1)

    @cached_property
    def n2_count(self) -> np.ndarray:
        return neighbor_sum(np.ones(self.shape, dtype=np.int64), 2)

    def index(self, ix: int, iy: int, iz: int) -> int:
        if not (0 <= ix < self.nx and 0 <= iy < self.ny and 0 <= iz < self.nz):
            raise ValueError(f"cell ({ix}, {iy}, {iz}) outside grid {self.nx}x{self.ny}x{self.nz}")
        return ix + self.nx * (iy + self.ny * iz)

    def coords(self, i: int) -> tuple[int, int, int]:
        """Inverse of :meth:`index`: ``(ix, iy, iz)``."""
        self._check_index(i)
        iz, rem = divmod(int(i), self.layer_size)
        iy, ix = divmod(rem, self.nx)
        return ix, iy, iz

    def _check_index(self, i) -> None:
        if int(i) != i or not 0 <= i < self.n_cells:
            raise ValueError(f"cell index {i!r} outside [0, {self.n_cells})")


def make_grid(nx: int, ny: int, nz_paper: int, nz_reservoir: int = 0, cell_size: float = 1.0) -> Grid:
    return Grid(nx, ny, nz_paper, nz_reservoir, cell_size)


def _shell(grid: Grid, i: int, offsets) -> list[int]:
    grid._check_index(i)
    ix, iy, iz = grid.coords(i)
    out = []
    for dz, dy, dx in offsets:
        x, y, z = ix + dx, iy + dy, iz + dz
        if 0 <= x < grid.nx and 0 <= y < grid.ny and 0 <= z < grid.nz:
            out.append(x + grid.nx * (y + grid.ny * z))
    return out


def n1_neighbors(grid: Grid, i: int) -> list[int]:
    """First-layer neighbors: the 26-neighborhood, clipped at the walls."""
    return _shell(grid, i, N1_OFFSETS)


def n2_neighbors(grid: Grid, i: int) -> list[int]:
    """Second-layer neighbors: Chebyshev distance exactly 2 (98 in the interior)."""
    return _shell(grid, i, N2_OFFSETS)


def neighbor_sum(field: np.ndarray, layer: int) -> np.ndarray:
    """Sum of ``field`` over N1 (``layer=1``) or N2 (``layer=2``) of every cell.

    Cells outside the grid contribute nothing (clipped neighborhoods).
    """
    kernel = {1: _N1_KERNEL, 2: _N2_KERNEL}[layer]
    return ndimage.convolve(np.asarray(field, dtype=np.int64), kernel, mode="constant", cval=0)


def neighbor_counts(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell ``|N1(i)|`` and ``|N2(i)|`` after clipping."""
    return grid.n1_count, grid.n2_count


def new_field(grid: Grid) -> np.ndarray:
    return np.zeros(grid.shape, dtype=np.uint8)


def check_field(field: np.ndarray, grid: Grid, name: str = "field") -> np.ndarray:
    field = np.asarray(field)
    if field.shape != grid.shape:
        raise ValueError(f"{name} has shape {field.shape}, grid expects {grid.shape}")
    if field.dtype != bool and field.size and (field.min() < 0 or field.max() > 1):
        raise ValueError(f"{name} must be binary (0/1)")
    return field
