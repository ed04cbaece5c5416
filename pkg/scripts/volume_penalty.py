"""How stiff must the volume penalty be for the GA to keep every ink cell?

Two parts:

* a lambda sweep of the finite-volume GA run, reporting the final volume
  error for each value;
* a Lagrangian certificate, independent of any heuristic: for a multiplier
  ``nu``, ``min_sigma E_t0(sigma) + nu (n - V_fluid0)`` is solvable exactly by
  min cut and bounds from below the interaction energy of every field holding
  exactly ``V_fluid0`` ink cells. When that bound exceeds the total energy of
  the empty field, no zero-error field can be the minimizer.

Usage: python scripts/volume_penalty.py [--config configs/ga_finite_volume.yaml]
"""

from __future__ import annotations

import argparse
import dataclasses

import numpy as np

from inkseep.cli import generate_fibers
from inkseep.config import load_config
from inkseep.energy import default_params, energy_direct, pairwise_model
from inkseep.gasolver import run
from inkseep.mincut import build_network, min_cut


def lagrangian_bound(phi, grid, vf0, nus):
    p0 = default_params(grid, vf0, lam=0.0)
    base = pairwise_model(phi, p0, grid)
    best = (-np.inf, None, None)
    for nu in nus:
        _, s = min_cut(build_network(dataclasses.replace(base, D1=base.D1 + nu)))
        n = int(s.sum())
        bound = energy_direct(s, phi, p0, grid).E_t0 + nu * (n - vf0)
        if bound > best[0]:
            best = (bound, nu, n)
    return best


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="configs/ga_finite_volume.yaml")
    ap.add_argument("--lambdas", type=float, nargs="+", default=[100, 1e3, 1e4, 1e5, 1e6])
    args = ap.parse_args()

    cfg = load_config(args.config)
    grid, vf0 = cfg.grid, cfg.energy.V_fluid0
    _, phi = generate_fibers(cfg)

    print("lambda,volume_error,V_fluid,paper_ink,converged,outer_iterations,E_t")
    for lam in args.lambdas:
        params = default_params(grid, vf0, gravity_sign=cfg.energy.gravity_sign,
                                **{**cfg.energy.overrides(), "lam": lam})
        res = run(phi, params, cfg.solver.reservoir, cfg.solver.ga, grid)
        paper = int(res.sigma[grid.nz_reservoir:].sum())
        print(f"{lam:g},{res.volume_error},{int(res.sigma.sum())},{paper},{res.converged},"
              f"{res.outer_iterations},{res.trace.rows[-1].E_t:.6f}")

    bound, nu, n = lagrangian_bound(phi, grid, vf0, np.linspace(-120, 0, 481))
    empty = energy_direct(np.zeros(grid.shape, np.uint8), phi, cfg.energy_params(), grid)
    per_lambda = vf0 ** 2 / grid.n_cells
    print(f"\nlower bound on E_t over fields with exactly {vf0:g} ink cells: {bound:.4f} "
          f"(nu={nu:g}, cut holds {n} cells)")
    print(f"empty field at lambda={cfg.energy_params().lam:g}: E_t={empty.E_t:.4f}")
    print(f"margin: {bound - empty.E_t:.4f}; the empty field beats every zero-error field "
          f"for lambda < {(bound - empty.E_t0) / per_lambda:.1f}")


if __name__ == "__main__":
    main()
