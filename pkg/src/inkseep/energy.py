"""Modified Ising energy: interaction terms, volume penalty, pairwise form.

Spins are stored as ``sigma in {0, 1}``; the +-1 spin is ``2*sigma - 1`` and is
never stored. ``phi`` is the fiber field in ``{0, 1}``.

Two algebraically equivalent evaluations are provided:

* :func:`energy_direct` sums the gravity, cohesion, adhesion and volume terms
  cell by cell using the +-1 spins.
* :func:`energy_pairwise` uses the quadratic pseudo-boolean form
  ``sum D1_i s_i + sum_{N1 ordered} V1 s_i s_j + sum_{N2 ordered} V2 s_i s_j
  + V3 (n^2 - n)`` with ``n = sum s``.

They differ by ``PairwiseModel.constant_offset`` for every configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .lattice import Grid, N1_OFFSETS, N2_OFFSETS, check_field, neighbor_sum

__all__ = [
    "EnergyParams",
    "EnergyBreakdown",
    "SumCache",
    "PairwiseModel",
    "default_params",
    "params_for",
    "solid_sums",
    "ink_sums",
    "energy_direct",
    "volume_energy",
    "pairwise_model",
    "energy_pairwise",
    "flip_delta",
]


@dataclass(frozen=True)
class EnergyParams:
    c1: float = 1.0
    c2: float = 0.125
    A0: float = 0.5
    A1: float = 1.0 / 3.0
    A2: float = 1.0 / 6.0
    Gg: float = 0.1
    lam: float = 100.0
    V_fluid0: float = 0.0
    V0: int = 1
    z_max: float = 10.0

    def __post_init__(self):
        if not self.c1 > 0:
            raise ValueError(f"c1 must be positive, got {self.c1}")
        for name in ("c2", "A0", "A1", "A2", "lam"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")
        if self.V0 < 1:
            raise ValueError(f"V0 must be positive, got {self.V0}")
        if not 0 <= self.V_fluid0 <= self.V0:
            raise ValueError(f"V_fluid0={self.V_fluid0} outside [0, V0={self.V0}]")


def params_for(z_max: float, V0: int, V_fluid0: float = 0.0, *, gravity_sign: int = 1, **overrides) -> EnergyParams:
    """Reference parameter set keyed on the cohesion coefficient c1.

    c2 = c1/8, Gg = c1/z_max, A0 = c1/2, A1 = 2/3 A0, A2 = 1/2 A1, lambda = 100.
    Any coefficient can be overridden; the dependent ones are derived from the
    overridden c1/A0/A1 unless given explicitly.
    """
    if not z_max > 0:
        raise ValueError(f"z_max must be positive for the gravity constant, got {z_max}")
    if gravity_sign not in (1, -1):
        raise ValueError(f"gravity_sign must be +1 or -1, got {gravity_sign}")
    c1 = overrides.pop("c1", 1.0)
    A0 = overrides.pop("A0", c1 / 2)
    A1 = overrides.pop("A1", 2 * A0 / 3)
    vals = dict(
        c1=c1,
        c2=c1 / 8,
        A0=A0,
        A1=A1,
        A2=A1 / 2,
        Gg=gravity_sign * c1 / z_max,
        lam=100.0,
        V_fluid0=V_fluid0,
        V0=V0,
        z_max=z_max,
    )
    unknown = set(overrides) - set(vals)
    if unknown:
        raise TypeError(f"unknown energy parameter(s): {sorted(unknown)}")
    vals.update(overrides)
    return EnergyParams(**vals)


def default_params(grid: Grid, V_fluid0: float = 0.0, *, gravity_sign: int = 1, **overrides) -> EnergyParams:
    return params_for(grid.z_max, grid.n_cells, V_fluid0, gravity_sign=gravity_sign, **overrides)


def solid_sums(phi: np.ndarray, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    phi = check_field(phi, grid, "phi")
    return neighbor_sum(phi, 1), neighbor_sum(phi, 2)


def ink_sums(sigma: np.ndarray, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Sums of the +-1 spins over N1 and N2."""
    sigma = check_field(sigma, grid, "sigma")
    k1, k2 = neighbor_sum(sigma, 1), neighbor_sum(sigma, 2)
    return 2 * k1 - grid.n1_count, 2 * k2 - grid.n2_count


@dataclass
class SumCache:
    """Neighbor sums F1, F2 (solid) and S1, S2 (+-1 ink) plus the ink count."""

    grid: Grid
    F1: np.ndarray
    F2: np.ndarray
    S1: np.ndarray
    S2: np.ndarray
    n_ink: int

    @classmethod
    def build(cls, sigma: np.ndarray, phi: np.ndarray, grid: Grid) -> "SumCache":
        F1, F2 = solid_sums(phi, grid)
        S1, S2 = ink_sums(sigma, grid)
        return cls(grid, F1, F2, S1, S2, int(np.count_nonzero(sigma)))

    def refresh(self, sigma: np.ndarray) -> None:
        self.S1, self.S2 = ink_sums(sigma, self.grid)
        self.n_ink = int(np.count_nonzero(sigma))

    def apply_flip(self, i: int, new_value: int) -> None:
        """Update S1/S2/n for cell ``i`` changing to ``new_value``.

        Must be called exactly once per actual change of sigma_i.
        """
        iz, iy, ix = np.unravel_index(i, self.grid.shape)
        step = 2 if new_value else -2
        for S, r in ((self.S1, 1), (self.S2, 2)):
            sl = tuple(slice(max(c - r, 0), c + r + 1) for c in (iz, iy, ix))
            S[sl] += step
            if r == 1:
                S[iz, iy, ix] -= step
            else:
                inner = tuple(slice(max(c - 1, 0), c + 2) for c in (iz, iy, ix))
                S[inner] -= step
        self.n_ink += 1 if new_value else -1

    def copy(self) -> "SumCache":
        return SumCache(self.grid, self.F1, self.F2, self.S1.copy(), self.S2.copy(), self.n_ink)


@dataclass(frozen=True)
class EnergyBreakdown:
    E_g: float
    E_c: float
    E_a: float
    E_V: float
    V_fluid: int

    @property
    def E_t0(self) -> float:
        return self.E_g + self.E_c + self.E_a

    @property
    def E_t(self) -> float:
        return self.E_g + self.E_c + self.E_a + self.E_V


def volume_energy(n_ink: float, params: EnergyParams) -> float:
    """lambda * (sum(spin + 1) - 2 V_fluid0)^2 / (4 V0), written in the ink count."""
    d = n_ink - params.V_fluid0
    return params.lam * d * d / params.V0


def _field_term(phi, F1, F2, params: EnergyParams, grid: Grid) -> np.ndarray:
    # per-cell coefficient of the +-1 spin in gravity + adhesion
    return params.Gg * grid.z - params.A0 * phi - params.A1 * F1 - params.A2 * F2


def energy_direct(sigma: np.ndarray, phi: np.ndarray, params: EnergyParams, grid: Grid) -> EnergyBreakdown:
    sigma = check_field(sigma, grid, "sigma")
    phi = check_field(phi, grid, "phi")
    if params.V0 != grid.n_cells:
        raise ValueError(f"params.V0={params.V0} does not match grid cell count {grid.n_cells}")
    spin = 2.0 * sigma - 1.0
    F1, F2 = solid_sums(phi, grid)
    S1, S2 = ink_sums(sigma, grid)
    E_g = float(np.sum(params.Gg * spin * grid.z))
    E_c = float(-np.sum(spin * (params.c1 * S1 + params.c2 * S2)))
    E_a = float(-np.sum(spin * (params.A0 * phi + params.A1 * F1 + params.A2 * F2)))
    n = int(np.count_nonzero(sigma))
    return EnergyBreakdown(E_g, E_c, E_a, volume_energy(n, params), n)


@dataclass
class PairwiseModel:
    """Quadratic pseudo-boolean form of the total energy.

    ``D1`` holds the unary coefficients (volume part folded in). Every ordered
    N1 pair carries ``V1`` and every ordered N2 pair ``V2``; the all-pairs
    volume coupling ``V3`` is kept as the closed form ``V3 * (n^2 - n)``.
    """

    grid: Grid
    params: EnergyParams
    phi: np.ndarray
    D1: np.ndarray
    V1: float
    V2: float
    V3: float
    constant_offset: float
    F1: np.ndarray = field(repr=False)
    F2: np.ndarray = field(repr=False)

    @property
    def lam(self) -> float:
        return self.params.lam

    @cached_property
    def D1_hat(self) -> np.ndarray:
        """Unary coefficients without the volume contribution."""
        p = self.params
        return self.D1 - p.lam * (1 - 2 * p.V_fluid0) / p.V0

    @cached_property
    def field_term(self) -> np.ndarray:
        return _field_term(self.phi, self.F1, self.F2, self.params, self.grid)

    def directed_pairs(self, layer: int) -> tuple[np.ndarray, np.ndarray]:
        """All ordered neighbor pairs ``(i, j)`` as flat-index arrays."""
        return _directed_pairs(self.grid, layer)


def _directed_pairs(grid: Grid, layer: int) -> tuple[np.ndarray, np.ndarray]:
    offsets = {1: N1_OFFSETS, 2: N2_OFFSETS}[layer]
    idx = np.arange(grid.n_cells).reshape(grid.shape)
    src, dst = [], []
    nz, ny, nx = grid.shape
    for dz, dy, dx in offsets:
        a = idx[max(0, -dz): nz - max(0, dz), max(0, -dy): ny - max(0, dy), max(0, -dx): nx - max(0, dx)]
        b = idx[max(0, dz): nz - max(0, -dz), max(0, dy): ny - max(0, -dy), max(0, dx): nx - max(0, -dx)]
        src.append(a.ravel())
        dst.append(b.ravel())
    return np.concatenate(src), np.concatenate(dst)


def pairwise_model(phi: np.ndarray, params: EnergyParams, grid: Grid) -> PairwiseModel:
    phi = check_field(phi, grid, "phi")
    if params.V0 != grid.n_cells:
        raise ValueError(f"params.V0={params.V0} does not match grid cell count {grid.n_cells}")
    F1, F2 = solid_sums(phi, grid)
    a = _field_term(phi, F1, F2, params, grid)
    n1, n2 = grid.n1_count, grid.n2_count
    c1, c2, lam, V0, Vf0 = params.c1, params.c2, params.lam, params.V0, params.V_fluid0
    # clipped counts replace the interior constants 26 and 98
    D1 = 2.0 * (a + 2.0 * (c1 * n1 + c2 * n2)) + lam * (1.0 - 2.0 * Vf0) / V0
    offset = float(-a.sum() - c1 * n1.sum() - c2 * n2.sum() + lam * Vf0 * Vf0 / V0)
    return PairwiseModel(
        grid=grid,
        params=params,
        phi=phi,
        D1=D1,
        V1=-4.0 * c1,
        V2=-4.0 * c2,
        V3=lam / V0,
        constant_offset=offset,
        F1=F1,
        F2=F2,
    )


def energy_pairwise(sigma: np.ndarray, model: PairwiseModel) -> float:
    sigma = check_field(sigma, model.grid, "sigma")
    s = sigma.astype(np.int64)
    n = int(s.sum())
    k1 = neighbor_sum(s, 1)
    k2 = neighbor_sum(s, 2)
    return float(
        np.sum(model.D1 * s)
        + model.V1 * np.sum(s * k1)
        + model.V2 * np.sum(s * k2)
        + model.V3 * (n * n - n)
    )


def flip_delta(sigma: np.ndarray, i: int, cache: SumCache, model: PairwiseModel) -> float:
    """Change of the pairwise energy when bit ``i`` of sigma is flipped. O(1)."""
    iz, iy, ix = np.unravel_index(i, model.grid.shape)
    k1 = (cache.S1[iz, iy, ix] + model.grid.n1_count[iz, iy, ix]) // 2
    k2 = (cache.S2[iz, iy, ix] + model.grid.n2_count[iz, iy, ix]) // 2
    n = cache.n_ink
    on = model.D1[iz, iy, ix] + 2 * model.V1 * k1 + 2 * model.V2 * k2
    if sigma[iz, iy, ix]:
        return float(-on - 2 * model.V3 * (n - 1))
    return float(on + 2 * model.V3 * n)
