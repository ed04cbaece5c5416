"""Energy profile of a finite-volume GA run, one row per inner pass.

Prints the per-epoch summary and writes the full trace CSV.

Usage: python scripts/convergence_trace.py [--config configs/ga_finite_volume.yaml]
       [--lambda 1e5] [--out out/trace.csv]
"""

from __future__ import annotations

import argparse

from inkseep.cli import generate_fibers
from inkseep.config import load_config
from inkseep.gasolver import run


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="configs/ga_finite_volume.yaml")
    ap.add_argument("--lambda", dest="lam", type=float, default=None)
    ap.add_argument("--out", default="trace.csv")
    args = ap.parse_args()

    overrides = {} if args.lam is None else {"energy.lambda": args.lam}
    cfg = load_config(args.config, overrides)
    _, phi = generate_fibers(cfg)
    res = run(phi, cfg.energy_params(), cfg.solver.reservoir, cfg.solver.ga, cfg.grid)
    res.trace.write_csv(args.out)

    last = {}
    for r in res.trace.rows:
        last[r.outer] = r
    print("outer,inner_passes,E_t,E_V,V_fluid")
    for outer, r in last.items():
        print(f"{outer},{r.inner},{r.E_t:.4f},{r.E_V:.4f},{r.V_fluid}")
    print(f"converged={res.converged} volume_error={res.volume_error} "
          f"monotonicity_violations={res.monotonicity_violations} rows={len(res.trace)} -> {args.out}")


if __name__ == "__main__":
    main()
