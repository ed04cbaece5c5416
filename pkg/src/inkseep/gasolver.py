"""Finite-volume solver: a genetic algorithm on the ink/air interface.

One run alternates epochs and inner passes. At the start of an epoch the ink
neighbor sums S1, S2 are frozen, which turns the interaction energy into a
linear function of the spins (its tangent plane at the epoch snapshot). Each
inner pass extracts the current ink/air interface, searches the interface
genes with a GA under the frozen linear energy plus the exact volume penalty,
applies the best chromosome if it does not raise that fitness, and refills the
reservoir band from an external source until the ink budget is dispensed.
Epochs repeat until the total energy changes by less than the tolerance.
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .energy import EnergyParams, PairwiseModel, SumCache, energy_direct, pairwise_model
from .lattice import Grid, check_field, neighbor_sum

__all__ = [
    "ReservoirSpec",
    "GaConfig",
    "TraceRow",
    "EnergyTrace",
    "SolverState",
    "RunResult",
    "init_state",
    "extract_interface",
    "frozen_coefficients",
    "frozen_fitness",
    "ga_minimize",
    "exact_chromosome_optimum",
    "refill",
    "run",
]

log = logging.getLogger(__name__)

TRACE_COLUMNS = ("outer", "inner", "E_t", "E_g", "E_c", "E_a", "E_V", "V_fluid", "seconds")


@dataclass(frozen=True)
class ReservoirSpec:
    depth_layers: int
    refill_enabled: bool = True

    def __post_init__(self):
        if int(self.depth_layers) != self.depth_layers or self.depth_layers < 0:
            raise ValueError(f"depth_layers must be a non-negative integer, got {self.depth_layers!r}")

    def cells(self, grid: Grid) -> np.ndarray:
        """Flat indices of the reservoir band, deepest layer first."""
        if self.depth_layers > grid.nz_reservoir:
            raise ValueError(
                f"reservoir depth {self.depth_layers} exceeds the grid's {grid.nz_reservoir} reservoir layers"
            )
        lo = (grid.nz_reservoir - self.depth_layers) * grid.layer_size
        return np.arange(lo, grid.nz_reservoir * grid.layer_size)


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 32
    generations_per_inner_iteration: int = 20
    crossover_rate: float = 0.9
    mutation_rate: float | None = None  # None: 1 / chromosome length
    tournament_size: int = 3
    elitism_count: int = 1
    init_flip_rate: float = 0.1
    inner_iterations_per_epoch: int = 100
    convergence_rel_tol: float = 1e-3
    max_outer_iterations: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if not 1 <= self.elitism_count < self.population_size:
            raise ValueError("elitism_count must be >= 1 and below population_size")
        if self.inner_iterations_per_epoch < 1 or self.max_outer_iterations < 1:
            raise ValueError("iteration counts must be >= 1")
        if self.generations_per_inner_iteration < 0 or self.tournament_size < 1:
            raise ValueError("generations must be >= 0 and tournament_size >= 1")
        for name in ("crossover_rate", "init_flip_rate"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.mutation_rate is not None and not 0 <= self.mutation_rate <= 1:
            raise ValueError("mutation_rate must lie in [0, 1] or be None")
        if self.convergence_rel_tol <= 0:
            raise ValueError("convergence_rel_tol must be positive")


@dataclass(frozen=True)
class TraceRow:
    outer: int
    inner: int
    E_t: float
    E_g: float
    E_c: float
    E_a: float
    E_V: float
    V_fluid: int
    seconds: float


@dataclass
class EnergyTrace:
    rows: list[TraceRow] = field(default_factory=list)

    def append(self, row: TraceRow) -> None:
        if self.rows and (row.outer, row.inner) <= (self.rows[-1].outer, self.rows[-1].inner):
            raise ValueError("trace rows must be strictly ordered by (outer, inner)")
        self.rows.append(row)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    def write_csv(self, path: str | Path, *, with_time: bool = True) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRACE_COLUMNS)
            for r in self.rows:
                vals = [getattr(r, c) for c in TRACE_COLUMNS]
                if not with_time:
                    vals[-1] = 0.0
                w.writerow([repr(v) if isinstance(v, float) else v for v in vals])

    def __len__(self) -> int:
        return len(self.rows)


@dataclass
class SolverState:
    grid: Grid
    phi: np.ndarray
    sigma: np.ndarray
    cache: SumCache  # S1/S2 as of the last epoch boundary
    dispensed_volume: int
    outer_iteration: int = 0
    inner_iteration: int = 0
    trace: EnergyTrace = field(default_factory=EnergyTrace)
    frozen: np.ndarray | None = None  # flat linear coefficients of the current epoch
    warnings: list[str] = field(default_factory=list)

    @property
    def n_ink(self) -> int:
        return int(np.count_nonzero(self.sigma))


@dataclass
class RunResult:
    sigma: np.ndarray
    trace: EnergyTrace
    converged: bool
    volume_error: int
    outer_iterations: int
    dispensed_volume: int
    # (outer, inner, fitness before GA, after GA apply, after refill)
    fitness_log: list[tuple[int, int, float, float, float]]
    warnings: list[str]

    @property
    def monotonicity_violations(self) -> int:
        """GA steps whose frozen fitness rose (refill injections excluded)."""
        return sum(1 for _, _, before, after, _ in self.fitness_log if after > before)


def init_state(grid: Grid, phi: np.ndarray, reservoir: ReservoirSpec, params: EnergyParams) -> SolverState:
    phi = check_field(phi, grid, "phi")
    band = reservoir.cells(grid)
    vf0 = int(round(params.V_fluid0))
    warnings = []
    if vf0 > len(band) and not reservoir.refill_enabled:
        msg = f"ink volume {vf0} exceeds reservoir capacity {len(band)} and refilling is disabled"
        log.warning(msg)
        warnings.append(msg)
    fill = band[~phi.ravel()[band].astype(bool)][:vf0]
    sigma = np.zeros(grid.n_cells, dtype=np.uint8)
    sigma[fill] = 1
    sigma = sigma.reshape(grid.shape)
    return SolverState(
        grid=grid,
        phi=phi,
        sigma=sigma,
        cache=SumCache.build(sigma, phi, grid),
        dispensed_volume=len(fill),
        warnings=warnings,
    )


def extract_interface(state: SolverState, phi: np.ndarray) -> np.ndarray:
    """Free cells on the ink/air front, ascending flat index.

    Ink cells with an empty free N1 neighbor, and empty free cells with an
    ink N1 neighbor. Fiber cells are never part of the interface.
    """
    free = phi == 0
    ink = state.sigma.astype(bool) & free
    air = free & ~ink
    near_air = neighbor_sum(air, 1) > 0
    near_ink = neighbor_sum(ink, 1) > 0
    return np.flatnonzero((ink & near_air) | (air & near_ink))


def frozen_coefficients(cache: SumCache, model: PairwiseModel) -> np.ndarray:
    """Linear coefficient of sigma_i with S1, S2 held at the cache values.

    Equals the exact single-flip change of the interaction energy at the
    snapshot: 2 (g_i - 2 c1 S1_i - 2 c2 S2_i) with g_i the gravity/adhesion
    field term.
    """
    p = model.params
    return (2.0 * model.field_term - 4.0 * p.c1 * cache.S1 - 4.0 * p.c2 * cache.S2).ravel()


def frozen_fitness(sigma: np.ndarray, base_sigma: np.ndarray, base_energy: float,
                   coef: np.ndarray, params: EnergyParams) -> float:
    """Tangent-plane interaction energy plus the exact volume penalty."""
    d = sigma.ravel().astype(np.int64) - base_sigma.ravel()
    n = int(np.count_nonzero(sigma))
    return float(base_energy + coef @ d + params.lam * (n - params.V_fluid0) ** 2 / params.V0)


def _fitness(pop: np.ndarray, g: np.ndarray, n_rest: int, params: EnergyParams) -> np.ndarray:
    n = n_rest + pop.sum(axis=1)
    return pop @ g + params.lam * (n - params.V_fluid0) ** 2 / params.V0


def _repair(pop: np.ndarray, g: np.ndarray, n_rest: int, cap: int) -> None:
    # enforce the volume ceiling: drop the costliest ink genes of oversized rows
    excess = n_rest + pop.sum(axis=1) - cap
    for r in np.flatnonzero(excess > 0):
        ones = np.flatnonzero(pop[r])
        order = ones[np.lexsort((-ones, -g[ones]))]
        pop[r, order[: excess[r]]] = 0


def exact_chromosome_optimum(g: np.ndarray, n_rest: int, params: EnergyParams, cap: int | None = None) -> float:
    """Minimum of the separable GA fitness, by sorting (used as a stopping test and oracle)."""
    gs = np.sort(g)
    m = np.arange(len(g) + 1)
    vals = np.concatenate(([0.0], np.cumsum(gs))) + params.lam * (n_rest + m - params.V_fluid0) ** 2 / params.V0
    if cap is not None:
        vals = vals[n_rest + m <= cap]
    return float(vals.min())


def _rng(cfg: GaConfig, outer: int, inner: int) -> np.random.Generator:
    ss = np.random.SeedSequence(cfg.seed, spawn_key=(outer, inner))
    return np.random.Generator(np.random.PCG64(ss))


def ga_minimize(cells: np.ndarray, state: SolverState, model: PairwiseModel, cfg: GaConfig,
                *, rng: np.random.Generator | None = None) -> np.ndarray | None:
    """Best bit assignment for ``cells`` under the frozen epoch fitness.

    Returns None for an empty chromosome. The incumbent is part of the
    initial population and elitism keeps the best individual, so the result
    never has worse fitness than the incumbent.
    """
    cells = np.asarray(cells, dtype=np.int64)
    L = len(cells)
    if L == 0:
        return None
    if state.frozen is None:
        state.frozen = frozen_coefficients(state.cache, model)
    if rng is None:
        rng = _rng(cfg, state.outer_iteration, state.inner_iteration)
    params = model.params
    g = state.frozen[cells]
    inc = state.sigma.ravel()[cells].astype(np.int64)
    n_rest = state.n_ink - int(inc.sum())
    cap = int(np.floor(params.V_fluid0))
    P, e, k = cfg.population_size, cfg.elitism_count, cfg.tournament_size
    pm = cfg.mutation_rate if cfg.mutation_rate is not None else 1.0 / L

    if L < 20 and 2**L <= P:
        # the whole search space fits in one population
        pop = ((np.arange(2**L)[:, None] >> np.arange(L)[None, :]) & 1).astype(np.int64)
    else:
        pop = np.repeat(inc[None, :], P, axis=0)
        pop[1:] ^= (rng.random((P - 1, L)) < cfg.init_flip_rate)
        _repair(pop, g, n_rest, cap)
        for _ in range(cfg.generations_per_inner_iteration):
            f = _fitness(pop, g, n_rest, params)
            order = np.lexsort((np.arange(P), f))
            elite = pop[order[:e]]
            nc = P - e
            cand = rng.integers(0, P, size=(2, nc, k))
            winners = np.take_along_axis(cand, np.argmin(f[cand], axis=-1)[..., None], axis=-1)[..., 0]
            p1, p2 = pop[winners[0]], pop[winners[1]]
            do_x = rng.random(nc) < cfg.crossover_rate
            mix = (rng.random((nc, L)) < 0.5) & do_x[:, None]
            children = np.where(mix, p2, p1)
            children ^= (rng.random((nc, L)) < pm)
            _repair(children, g, n_rest, cap)
            pop = np.vstack([elite, children])
    f = _fitness(pop, g, n_rest, params)
    f[n_rest + pop.sum(axis=1) > max(cap, n_rest + int(inc.sum()))] = np.inf
    i_best = np.lexsort((np.arange(len(pop)), f))[0]
    if f[i_best] > _fitness(inc[None, :], g, n_rest, params)[0]:
        return inc.astype(np.uint8)
    return pop[i_best].astype(np.uint8)


def refill(state: SolverState, reservoir: ReservoirSpec, params: EnergyParams) -> SolverState:
    """Top up empty reservoir cells (deepest first) until the budget is dispensed."""
    vf0 = int(round(params.V_fluid0))
    n = state.n_ink
    if not reservoir.refill_enabled or n >= vf0 or state.dispensed_volume >= vf0:
        return state
    band = reservoir.cells(state.grid)
    flat = state.sigma.ravel()
    empty = band[(flat[band] == 0) & (state.phi.ravel()[band] == 0)]
    k = min(vf0 - n, vf0 - state.dispensed_volume, len(empty))
    if k > 0:
        flat = flat.copy()
        flat[empty[:k]] = 1
        state.sigma = flat.reshape(state.grid.shape)
        state.dispensed_volume += k
    return state


def _row(state: SolverState, params: EnergyParams, t0: float) -> TraceRow:
    b = energy_direct(state.sigma, state.phi, params, state.grid)
    return TraceRow(state.outer_iteration, state.inner_iteration, b.E_t, b.E_g, b.E_c, b.E_a, b.E_V,
                    b.V_fluid, time.perf_counter() - t0)


def run(phi: np.ndarray, params: EnergyParams, reservoir: ReservoirSpec, cfg: GaConfig,
        grid: Grid) -> RunResult:
    t0 = time.perf_counter()
    state = init_state(grid, phi, reservoir, params)
    model = pairwise_model(phi, params, grid)
    state.trace.append(_row(state, params, t0))
    e_prev = state.trace.rows[-1].E_t
    fitness_log = []
    converged = False
    cap = int(np.floor(params.V_fluid0))

    for outer in range(1, cfg.max_outer_iterations + 1):
        state.outer_iteration = outer
        state.inner_iteration = 0
        state.frozen = coef = frozen_coefficients(state.cache, model)
        base_sigma = state.sigma.copy()
        base_energy = energy_direct(state.sigma, phi, params, grid).E_t0

        def fit(s):
            return frozen_fitness(s, base_sigma, base_energy, coef, params)

        for inner in range(1, cfg.inner_iterations_per_epoch + 1):
            state.inner_iteration = inner
            cells = extract_interface(state, phi)
            if len(cells) == 0:
                break
            before = fit(state.sigma)
            bits = ga_minimize(cells, state, model, cfg)
            flat = state.sigma.ravel().copy()
            old = flat[cells].copy()
            flat[cells] = bits
            candidate = flat.reshape(grid.shape)
            after = fit(candidate)
            if after <= before:
                state.sigma = candidate
            else:
                after = before
            changed = bool(np.any(state.sigma.ravel()[cells] != old))
            refill(state, reservoir, params)
            after_refill = fit(state.sigma)
            fitness_log.append((outer, inner, before, after, after_refill))
            state.trace.append(_row(state, params, t0))
            if not changed and after_refill == after:
                # nothing moved: the remaining passes of this epoch would see the
                # same chromosome, so stop once no GA can improve it
                g = coef[cells]
                n_rest = state.n_ink - int(state.sigma.ravel()[cells].sum())
                inc_fit = float(g @ state.sigma.ravel()[cells]
                                + params.lam * (state.n_ink - params.V_fluid0) ** 2 / params.V0)
                best = exact_chromosome_optimum(g, n_rest, params, max(cap, state.n_ink))
                if inc_fit <= best + 1e-9 * max(1.0, abs(best)):
                    break

        state.cache.refresh(state.sigma)
        e_now = state.trace.rows[-1].E_t
        if abs(e_now - e_prev) <= cfg.convergence_rel_tol * abs(e_prev):
            converged = True
            break
        e_prev = e_now

    state.frozen = None
    return RunResult(
        sigma=state.sigma,
        trace=state.trace,
        converged=converged,
        volume_error=abs(state.n_ink - int(round(params.V_fluid0))),
        outer_iterations=state.outer_iteration,
        dispensed_volume=state.dispensed_volume,
        fitness_log=fitness_log,
        warnings=state.warnings,
    )
