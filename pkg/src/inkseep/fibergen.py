"""Random fiber deposition and voxelization into the solid field ``phi``.

Fibers are chains of rectangular blocks dropped one fiber at a time onto a
substrate at z = 0. Each block turns in-plane by at most ``max_turn_deg``
relative to its predecessor and settles onto whatever lies beneath it; the
resulting climb or drop along the chain is limited to ``max_bend_deg``.
Blocks stay upright boxes (stair-step bending), so a tilted block is a box
translated in z whose horizontal length is ``L cos(tilt)``.

All lengths are in cell units. The random source is numpy's PCG64.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .lattice import Grid, check_field

__all__ = [
    "RNG_ALGORITHM",
    "FiberParams",
    "Block",
    "Fiber",
    "FiberStructure",
    "generate",
    "voxelize",
    "porosity",
]

RNG_ALGORITHM = "numpy.random.PCG64"
_RASTER = 0.25  # height-map sampling step, cell units


@dataclass(frozen=True)
class FiberParams:
    fiber_count: int = 30
    blocks_per_fiber: int = 8
    block_length: float = 3.0
    block_width: float = 1.5
    block_height: float = 1.0
    max_turn_deg: float = 20.0
    max_bend_deg: float = 30.0
    extent_x: float = 20.0
    extent_y: float = 20.0
    seed: int = 0

    def __post_init__(self):
        for name in ("fiber_count", "blocks_per_fiber"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        for name in ("block_length", "block_width", "block_height", "extent_x", "extent_y"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        for name in ("max_turn_deg", "max_bend_deg"):
            if not 0 <= getattr(self, name) <= 90:
                raise ValueError(f"{name} must lie in [0, 90], got {getattr(self, name)!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")


@dataclass(frozen=True)
class Block:
    start: tuple[float, float, float]  # guide-line point at the bottom face
    end: tuple[float, float, float]
    angle_deg: float  # in-plane heading
    tilt_deg: float
    dims: tuple[float, float, float]  # length, width, height

    @property
    def center(self) -> tuple[float, float, float]:
        return (
            (self.start[0] + self.end[0]) / 2,
            (self.start[1] + self.end[1]) / 2,
            (self.start[2] + self.end[2]) / 2 + self.dims[2] / 2,
        )

    @property
    def bottom(self) -> float:
        return (self.start[2] + self.end[2]) / 2

    @property
    def horizontal_length(self) -> float:
        return self.dims[0] * math.cos(math.radians(self.tilt_deg))


@dataclass(frozen=True)
class Fiber:
    blocks: tuple[Block, ...]


@dataclass(frozen=True)
class FiberStructure:
    fibers: tuple[Fiber, ...]
    params: FiberParams
    rng_algorithm: str = RNG_ALGORITHM

    def to_dict(self) -> dict:
        return {
            "rng_algorithm": self.rng_algorithm,
            "params": asdict(self.params),
            "fibers": [[asdict(b) for b in f.blocks] for f in self.fibers],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FiberStructure":
        fibers = tuple(
            Fiber(tuple(
                Block(tuple(b["start"]), tuple(b["end"]), b["angle_deg"], b["tilt_deg"], tuple(b["dims"]))
                for b in blocks
            ))
            for blocks in d["fibers"]
        )
        return cls(fibers, FiberParams(**d["params"]), d.get("rng_algorithm", RNG_ALGORITHM))


class _HeightMap:
    def __init__(self, ex: float, ey: float):
        self.xs = np.arange(_RASTER / 2, ex, _RASTER)
        self.ys = np.arange(_RASTER / 2, ey, _RASTER)
        self.h = np.zeros((len(self.ys), len(self.xs)))

    def _mask(self, cx, cy, theta, length, width):
        c, s = math.cos(theta), math.sin(theta)
        rx = abs(c) * length / 2 + abs(s) * width / 2
        ry = abs(s) * length / 2 + abs(c) * width / 2
        ix = np.searchsorted(self.xs, [cx - rx, cx + rx])
        iy = np.searchsorted(self.ys, [cy - ry, cy + ry])
        X, Y = np.meshgrid(self.xs[ix[0]:ix[1]] - cx, self.ys[iy[0]:iy[1]] - cy)
        u = X * c + Y * s
        v = -X * s + Y * c
        inside = (np.abs(u) <= length / 2) & (np.abs(v) <= width / 2)
        return (slice(iy[0], iy[1]), slice(ix[0], ix[1])), inside

    def support(self, cx, cy, theta, length, width) -> float:
        sl, inside = self._mask(cx, cy, theta, length, width)
        vals = self.h[sl][inside]
        return float(vals.max()) if vals.size else 0.0

    def deposit(self, block: Block) -> None:
        cx, cy, _ = block.center
        sl, inside = self._mask(cx, cy, math.radians(block.angle_deg), block.horizontal_length, block.dims[1])
        top = block.bottom + block.dims[2]
        sub = self.h[sl]
        sub[inside] = np.maximum(sub[inside], top)


def generate(params: FiberParams) -> FiberStructure:
    rng = np.random.Generator(np.random.PCG64(params.seed))
    L, w, h = params.block_length, params.block_width, params.block_height
    max_rise = L * math.sin(math.radians(params.max_bend_deg))
    heights = _HeightMap(params.extent_x, params.extent_y)
    fibers = []
    for _ in range(params.fiber_count):
        x, y = rng.uniform(0, params.extent_x), rng.uniform(0, params.extent_y)
        theta = rng.uniform(0.0, 360.0)
        z = None
        blocks = []
        for k in range(params.blocks_per_fiber):
            if k:
                theta += rng.uniform(-params.max_turn_deg, params.max_turn_deg)
            t = math.radians(theta)
            dx, dy = math.cos(t), math.sin(t)
            s = heights.support(x + dx * L / 2, y + dy * L / 2, t, L, w)
            if z is None:
                z = s
            rise = min(max(max(2 * s - z, 0.0) - z, -max_rise), max_rise)
            tilt = math.degrees(math.asin(rise / L))
            run = math.sqrt(L * L - rise * rise)
            end = (x + dx * run, y + dy * run, z + rise)
            blocks.append(Block((x, y, z), end, theta, tilt, (L, w, h)))
            x, y, z = end
        for b in blocks:
            heights.deposit(b)
        fibers.append(Fiber(tuple(blocks)))
    return FiberStructure(tuple(fibers), params)


def voxelize(structure: FiberStructure, grid: Grid) -> np.ndarray:
    """phi_i = 1 iff the center of cell i lies inside some block.

    Reservoir layers are never solid. Blocks overhanging the lateral bounds
    are clipped.
    """
    phi = np.zeros(grid.shape, dtype=np.uint8)
    xc = np.arange(grid.nx) + 0.5
    yc = np.arange(grid.ny) + 0.5
    zc = np.arange(grid.nz_paper) + 0.5
    paper = phi[grid.nz_reservoir:]
    for fiber in structure.fibers:
        for b in fiber.blocks:
            _stamp(paper, b, xc, yc, zc)
    return phi


def _stamp(paper, b: Block, xc, yc, zc) -> None:
    L, w, h = b.horizontal_length, b.dims[1], b.dims[2]
    cx, cy, _ = b.center
    t = math.radians(b.angle_deg)
    c, s = math.cos(t), math.sin(t)
    rx = abs(c) * L / 2 + abs(s) * w / 2
    ry = abs(s) * L / 2 + abs(c) * w / 2
    ix = np.searchsorted(xc, [cx - rx, cx + rx], side="left")
    iy = np.searchsorted(yc, [cy - ry, cy + ry], side="left")
    iz = np.searchsorted(zc, [b.bottom, b.bottom + h], side="left")
    ix[1] = np.searchsorted(xc, cx + rx, side="right")
    iy[1] = np.searchsorted(yc, cy + ry, side="right")
    iz[1] = np.searchsorted(zc, b.bottom + h, side="right")
    if ix[0] >= ix[1] or iy[0] >= iy[1] or iz[0] >= iz[1]:
        return
    Y, X = np.meshgrid(yc[iy[0]:iy[1]] - cy, xc[ix[0]:ix[1]] - cx, indexing="ij")
    u = X * c + Y * s
    v = -X * s + Y * c
    inside = (np.abs(u) <= L / 2 + 1e-12) & (np.abs(v) <= w / 2 + 1e-12)
    paper[iz[0]:iz[1], iy[0]:iy[1], ix[0]:ix[1]] |= inside[None, :, :].astype(np.uint8)


def porosity(phi: np.ndarray, grid: Grid) -> float:
    """Fraction of paper-layer cells that are not solid."""
    phi = check_field(phi, grid, "phi")
    paper = phi[grid.nz_reservoir:]
    return 1.0 - float(np.count_nonzero(paper)) / paper.size
