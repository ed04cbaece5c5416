"""Command line: ``inkseep {fibergen,solve,report,export}``.

Exit codes: 0 ok, 2 configuration error, 3 solver did not converge (artifacts
are still written), 4 I/O failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import platform
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import scipy
import yaml

from . import __version__
from .analysis import fiber_adjacency_fraction, fill_fraction, saturation_profile, volume_error
from .config import ConfigError, RunConfig, dump_config, load_config
from .energy import energy_direct
from .fibergen import RNG_ALGORITHM, FiberStructure, generate, porosity, voxelize
from .fieldio import read_ivf, write_ivf, write_vtk
from .gasolver import EnergyTrace, TraceRow, run
from .mincut import solve_infinite

log = logging.getLogger("inkseep")

EXIT_OK, EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_IO = 0, 2, 3, 4


@dataclass
class PipelineResult:
    status: int
    artifacts: dict[str, str]
    manifest: dict


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _versions() -> dict[str, str]:
    return {"inkseep": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


def generate_fibers(cfg: RunConfig) -> tuple[FiberStructure, np.ndarray]:
    structure = generate(cfg.fiber)
    return structure, voxelize(structure, cfg.grid)


def run_pipeline(cfg: RunConfig, *, phi: np.ndarray | None = None, solve: bool = True) -> PipelineResult:
    """Generate fibers, optionally solve, and write every artifact plus a manifest."""
    out = Path(cfg.output.directory)
    timings: dict[str, float] = {}
    t = time.perf_counter()
    structure = None
    if phi is None:
        structure, phi = generate_fibers(cfg)
    timings["fibergen"] = time.perf_counter() - t
    grid = cfg.grid
    params = cfg.energy_params()
    manifest = {
        "inkseep_manifest": 1,
        "config": cfg.to_dict(),
        "rng_algorithm": RNG_ALGORITHM,
        "seeds": {"run": cfg.seed, "fiber": cfg.fiber.seed, "ga": cfg.solver.ga.seed},
        "versions": _versions(),
        "energy_params": asdict(params),
        "gravity_sign": cfg.energy.gravity_sign,
        "porosity": porosity(phi, grid),
    }
    artifacts: dict[str, Path] = {}
    status = EXIT_OK
    sigma = trace = None
    if solve:
        t = time.perf_counter()
        if cfg.solver.method == "mincut":
            sigma, b = solve_infinite(phi, params, grid)
            trace = EnergyTrace()
            trace.append(TraceRow(0, 0, b.E_t, b.E_g, b.E_c, b.E_a, b.E_V, b.V_fluid, time.perf_counter() - t))
            converged = True
        else:
            result = run(phi, params, cfg.solver.reservoir, cfg.solver.ga, grid)
            sigma, trace, converged = result.sigma, result.trace, result.converged
            manifest.update(
                outer_iterations=result.outer_iterations,
                dispensed_volume=result.dispensed_volume,
                monotonicity_violations=result.monotonicity_violations,
                warnings=result.warnings,
            )
        timings["solve"] = time.perf_counter() - t
        b = energy_direct(sigma, phi, params, grid)
        manifest.update(
            method=cfg.solver.method,
            converged=converged,
            volume_error=volume_error(sigma, params),
            V_fluid=b.V_fluid,
            energy={"E_t": b.E_t, "E_g": b.E_g, "E_c": b.E_c, "E_a": b.E_a, "E_V": b.E_V},
            fill_fraction=fill_fraction(sigma, phi, grid),
            fiber_adjacency_fraction=fiber_adjacency_fraction(sigma, phi, grid),
        )
        if not converged:
            status = EXIT_NOT_CONVERGED

    try:
        out.mkdir(parents=True, exist_ok=True)
        if structure is not None:
            artifacts["structure"] = out / "structure.json"
            artifacts["structure"].write_text(json.dumps(structure.to_dict(), indent=1))
        artifacts["phi"] = out / "phi.ivf"
        write_ivf(artifacts["phi"], phi, grid, "phi")
        if "vtk" in cfg.output.formats:
            artifacts["phi_vtk"] = out / "phi.vtk"
            write_vtk(artifacts["phi_vtk"], phi, grid, "phi")
        if sigma is not None:
            artifacts["sigma"] = out / "sigma.ivf"
            write_ivf(artifacts["sigma"], sigma, grid, "sigma")
            artifacts["trace"] = out / "trace.csv"
            trace.write_csv(artifacts["trace"])
            artifacts["profile"] = out / "profile.csv"
            saturation_profile(sigma, phi, grid).write_csv(artifacts["profile"])
            if "vtk" in cfg.output.formats:
                artifacts["sigma_vtk"] = out / "sigma.vtk"
                write_vtk(artifacts["sigma_vtk"], sigma, grid, "sigma")
        (out / "config.yaml").write_text(dump_config(cfg))
        manifest["wall_seconds"] = timings
        manifest["files"] = {k: {"path": p.name, "sha256": _sha256(p)} for k, p in artifacts.items()}
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    except OSError as exc:
        log.error("cannot write artifacts to %s: %s", out, exc)
        return PipelineResult(EXIT_IO, {k: str(v) for k, v in artifacts.items()}, manifest)
    return PipelineResult(status, {k: str(v) for k, v in artifacts.items()}, manifest)


def _parse_set(items: list[str]) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"{item}: expected KEY=VALUE")
        key, value = item.split("=", 1)
        out[key.strip()] = yaml.safe_load(value)
    return out


def _config_from_args(args) -> RunConfig:
    overrides = _parse_set(args.set)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["output.directory"] = args.out
    if getattr(args, "method", None):
        overrides["solver.method"] = args.method
    if getattr(args, "lam", None) is not None:
        overrides["energy.lambda"] = args.lam
    if getattr(args, "V_fluid0", None) is not None:
        overrides["energy.V_fluid0"] = args.V_fluid0
    return load_config(args.config, overrides)


def _cmd_pipeline(args, solve: bool) -> int:
    cfg = _config_from_args(args)
    phi = None
    if getattr(args, "phi", None):
        phi, grid, _ = read_ivf(args.phi)
        if grid != cfg.grid:
            raise ConfigError(f"--phi: field grid {grid} differs from config grid {cfg.grid}")
    res = run_pipeline(cfg, phi=phi, solve=solve)
    m = res.manifest
    if solve and res.status != EXIT_IO:
        print(f"method={m['method']} converged={m['converged']} V_fluid={m['V_fluid']} "
              f"volume_error={m['volume_error']} E_t={m['energy']['E_t']:.6g} "
              f"fill_fraction={m['fill_fraction']:.4f}")
    print(f"wrote {len(res.artifacts)} artifacts to {cfg.output.directory}")
    return res.status


def _cmd_report(args) -> int:
    sigma, grid, _ = read_ivf(args.sigma)
    phi, grid_phi, _ = read_ivf(args.phi)
    if grid != grid_phi:
        raise ConfigError("--phi: grid differs from the sigma field's grid")
    prof = saturation_profile(sigma, phi, grid)
    n = int(np.count_nonzero(sigma))
    print(f"V_fluid={n}")
    if args.V_fluid0 is not None:
        print(f"volume_error={abs(n - int(round(args.V_fluid0)))}")
    print(f"fiber_adjacency_fraction={fiber_adjacency_fraction(sigma, phi, grid):.6f}")
    print(f"fill_fraction={fill_fraction(sigma, phi, grid):.6f}")
    if args.out:
        prof.write_csv(args.out)
    else:
        print("layer,z,free_cells,ink_cells,saturation")
        for r in prof.rows:
            print(f"{r.layer},{r.z},{r.free_cells},{r.ink_cells},{r.saturation:.6f}")
    return EXIT_OK


def _cmd_export(args) -> int:
    field, grid, name = read_ivf(args.field)
    out = args.out or str(Path(args.field).with_suffix(".vtk"))
    write_vtk(out, field, grid, name)
    print(f"wrote {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="inkseep", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("config", help="YAML run configuration")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config key, e.g. --set grid.nx=30 (repeatable)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output directory (output.directory)")

    fg = sub.add_parser("fibergen", help="generate a fiber structure and its phi field")
    common(fg)

    sv = sub.add_parser("solve", help="generate (or load) phi and solve for the ink field")
    common(sv)
    sv.add_argument("--method", choices=("ga", "mincut"))
    sv.add_argument("--lambda", dest="lam", type=float)
    sv.add_argument("--V-fluid0", dest="V_fluid0", type=float)
    sv.add_argument("--phi", help="reuse an existing phi.ivf instead of generating fibers")

    rp = sub.add_parser("report", help="saturation profile and volume error of a solved field")
    rp.add_argument("--sigma", required=True)
    rp.add_argument("--phi", required=True)
    rp.add_argument("--V-fluid0", dest="V_fluid0", type=float)
    rp.add_argument("--out", help="write the profile CSV here instead of stdout")

    ex = sub.add_parser("export", help="convert an IVF1 field to legacy-VTK")
    ex.add_argument("field")
    ex.add_argument("--out")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "fibergen":
            return _cmd_pipeline(args, solve=False)
        if args.command == "solve":
            return _cmd_pipeline(args, solve=True)
        if args.command == "report":
            return _cmd_report(args)
        return _cmd_export(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
