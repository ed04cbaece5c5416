"""Run configuration: a YAML document with nested blocks.

Schema (every key optional except ``grid``)::

    seed: 0
    grid:   {nx, ny, nz_paper, nz_reservoir: 0, cell_size: 1.0}
    fiber:  {fiber_count, blocks_per_fiber, block_length, block_width,
             block_height, max_turn_deg, max_bend_deg, extent_x, extent_y, seed}
    energy: {V_fluid0: 0, lambda, c1, c2, A0, A1, A2, Gg, gravity_sign: 1}
    solver: {method: ga | mincut,
             reservoir: {depth_layers, refill_enabled: true},
             ga: {population_size, generations_per_inner_iteration, ...}}
    output: {directory: out, formats: [ivf, vtk]}

Omitted energy coefficients take the reference values (c1 = 1, c2 = c1/8,
Gg = gravity_sign * c1/z_max, A0 = c1/2, A1 = 2/3 A0, A2 = 1/2 A1,
lambda = 100). Fiber extents default to the grid footprint, the reservoir
depth to all reservoir layers, and both seeds to the top-level seed.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml

from .energy import EnergyParams, default_params
from .fibergen import FiberParams
from .gasolver import GaConfig, ReservoirSpec
from .lattice import Grid

__all__ = ["ConfigError", "EnergyConfig", "SolverConfig", "OutputConfig", "RunConfig",
           "load_config", "parse_config", "dump_config"]

FORMATS = ("ivf", "vtk")
METHODS = ("ga", "mincut")


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending key."""


@dataclass(frozen=True)
class EnergyConfig:
    V_fluid0: float = 0.0
    gravity_sign: int = 1
    # None: reference value derived from c1 and the grid
    c1: float | None = None
    c2: float | None = None
    A0: float | None = None
    A1: float | None = None
    A2: float | None = None
    Gg: float | None = None
    lam: float | None = None

    def overrides(self) -> dict[str, float]:
        keys = ("c1", "c2", "A0", "A1", "A2", "Gg", "lam")
        return {k: getattr(self, k) for k in keys if getattr(self, k) is not None}

    @property
    def effective_lambda(self) -> float:
        return 100.0 if self.lam is None else self.lam


@dataclass(frozen=True)
class SolverConfig:
    method: str = "ga"
    reservoir: ReservoirSpec = ReservoirSpec(0)
    ga: GaConfig = GaConfig()


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    formats: tuple[str, ...] = ("ivf",)


@dataclass(frozen=True)
class RunConfig:
    grid: Grid
    fiber: FiberParams
    energy: EnergyConfig = EnergyConfig()
    solver: SolverConfig = SolverConfig()
    output: OutputConfig = OutputConfig()
    seed: int = 0

    def energy_params(self) -> EnergyParams:
        return default_params(self.grid, self.energy.V_fluid0, gravity_sign=self.energy.gravity_sign,
                              **self.energy.overrides())

    def to_dict(self) -> dict[str, Any]:
        energy = {k: v for k, v in dataclasses.asdict(self.energy).items() if v is not None}
        if "lam" in energy:
            energy["lambda"] = energy.pop("lam")
        return {
            "seed": self.seed,
            "grid": dataclasses.asdict(self.grid),
            "fiber": dataclasses.asdict(self.fiber),
            "energy": energy,
            "solver": {
                "method": self.solver.method,
                "reservoir": dataclasses.asdict(self.solver.reservoir),
                "ga": dataclasses.asdict(self.solver.ga),
            },
            "output": {"directory": self.output.directory, "formats": list(self.output.formats)},
        }


def _block(d: Any, where: str) -> dict:
    if d is None:
        return {}
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(d).__name__}")
    return dict(d)


def _check_keys(d: dict, allowed, where: str) -> None:
    for k in d:
        if k not in allowed:
            raise ConfigError(f"{where}.{k}: unknown key" if where else f"{k}: unknown key")


def _typed(value, typ, key: str):
    if typ is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected a boolean, got {value!r}")
        return value
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if typ is str:
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        return value
    raise TypeError(typ)


def _build(cls, d: dict, types: dict, where: str, **extra):
    _check_keys(d, types, where)
    kwargs = {}
    for k, v in d.items():
        typ = types[k]
        if v is None and isinstance(typ, tuple):  # optional
            kwargs[k] = None
            continue
        kwargs[k] = _typed(v, typ[0] if isinstance(typ, tuple) else typ, f"{where}.{k}")
    kwargs.update(extra)
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


_GRID = {"nx": int, "ny": int, "nz_paper": int, "nz_reservoir": int, "cell_size": float}
_FIBER = {"fiber_count": int, "blocks_per_fiber": int, "block_length": float, "block_width": float,
          "block_height": float, "max_turn_deg": float, "max_bend_deg": float, "extent_x": float,
          "extent_y": float, "seed": int}
_ENERGY = {"V_fluid0": float, "gravity_sign": int, "c1": (float,), "c2": (float,), "A0": (float,),
           "A1": (float,), "A2": (float,), "Gg": (float,), "lam": (float,)}
_RESERVOIR = {"depth_layers": int, "refill_enabled": bool}
_GA = {"population_size": int, "generations_per_inner_iteration": int, "crossover_rate": float,
       "mutation_rate": (float,), "tournament_size": int, "elitism_count": int, "init_flip_rate": float,
       "inner_iterations_per_epoch": int, "convergence_rel_tol": float, "max_outer_iterations": int,
       "seed": int}


def parse_config(raw: Any) -> RunConfig:
    raw = _block(raw, "<root>")
    _check_keys(raw, ("seed", "grid", "fiber", "energy", "solver", "output"), "")
    if "grid" not in raw:
        raise ConfigError("grid: required block is missing")
    seed = _typed(raw.get("seed", 0), int, "seed")
    if seed < 0:
        raise ConfigError("seed: must be non-negative")

    grid_d = _block(raw["grid"], "grid")
    for k in ("nx", "ny", "nz_paper"):
        if k not in grid_d:
            raise ConfigError(f"grid.{k}: required key is missing")
    grid = _build(Grid, grid_d, _GRID, "grid")

    fiber_d = _block(raw.get("fiber"), "fiber")
    fiber_d.setdefault("extent_x", grid.nx)
    fiber_d.setdefault("extent_y", grid.ny)
    fiber_d.setdefault("seed", seed)
    fiber = _build(FiberParams, fiber_d, _FIBER, "fiber")

    energy_d = _block(raw.get("energy"), "energy")
    if "lambda" in energy_d:
        if "lam" in energy_d:
            raise ConfigError("energy.lam: give either lambda or lam")
        energy_d["lam"] = energy_d.pop("lambda")
    elif "lam" in energy_d:
        raise ConfigError("energy.lam: unknown key (use lambda)")
    energy = _build(EnergyConfig, energy_d, _ENERGY, "energy")
    if energy.gravity_sign not in (1, -1):
        raise ConfigError("energy.gravity_sign: must be 1 or -1")

    solver_d = _block(raw.get("solver"), "solver")
    _check_keys(solver_d, ("method", "reservoir", "ga"), "solver")
    method = _typed(solver_d.get("method", "ga"), str, "solver.method")
    if method not in METHODS:
        raise ConfigError(f"solver.method: must be one of {METHODS}, got {method!r}")
    res_d = _block(solver_d.get("reservoir"), "solver.reservoir")
    res_d.setdefault("depth_layers", grid.nz_reservoir)
    reservoir = _build(ReservoirSpec, res_d, _RESERVOIR, "solver.reservoir")
    if reservoir.depth_layers > grid.nz_reservoir:
        raise ConfigError(
            f"solver.reservoir.depth_layers: {reservoir.depth_layers} exceeds grid.nz_reservoir={grid.nz_reservoir}"
        )
    ga_d = _block(solver_d.get("ga"), "solver.ga")
    ga_d.setdefault("seed", seed)
    ga = _build(GaConfig, ga_d, _GA, "solver.ga")

    out_d = _block(raw.get("output"), "output")
    _check_keys(out_d, ("directory", "formats"), "output")
    directory = _typed(out_d.get("directory", "out"), str, "output.directory")
    formats = out_d.get("formats", ["ivf"])
    if not isinstance(formats, list) or any(f not in FORMATS for f in formats):
        raise ConfigError(f"output.formats: expected a list drawn from {FORMATS}, got {formats!r}")

    cfg = RunConfig(grid, fiber, energy, SolverConfig(method, reservoir, ga),
                    OutputConfig(directory, tuple(formats)), seed)
    if method == "mincut" and energy.effective_lambda != 0:
        raise ConfigError("energy.lambda: the mincut solver needs lambda = 0 (volume term not cut-representable)")
    if energy.V_fluid0 < 0:
        raise ConfigError("energy.V_fluid0: must be non-negative")
    try:
        cfg.energy_params()
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"energy: {exc}") from None
    return cfg


def load_config(path: str | Path, overrides: dict[str, Any] | None = None) -> RunConfig:
    """Read and validate a YAML config; ``overrides`` maps dotted keys to values."""
    with open(path, encoding="utf-8") as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"<file>: not valid YAML ({exc})") from None
    raw = raw if raw is not None else {}
    for key, value in (overrides or {}).items():
        set_dotted(raw, key, value)
    return parse_config(raw)


def set_dotted(d: dict, key: str, value: Any) -> None:
    parts = key.split(".")
    node = d
    for p in parts[:-1]:
        nxt = node.setdefault(p, {})
        if not isinstance(nxt, dict):
            raise ConfigError(f"{key}: {p} is not a block")
        node = nxt
    node[parts[-1]] = value


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
