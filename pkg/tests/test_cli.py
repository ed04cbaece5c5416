import json

import numpy as np
import pytest
import yaml

from oracles import brute_force_min
from inkseep.cli import main
from inkseep.config import load_config
from inkseep.energy import energy_direct
from inkseep.fieldio import read_ivf

GA = {
    "seed": 2,
    "grid": {"nx": 6, "ny": 6, "nz_paper": 4, "nz_reservoir": 1},
    "fiber": {"fiber_count": 4, "blocks_per_fiber": 3},
    "energy": {"V_fluid0": 20, "lambda": 100000},
    "solver": {"method": "ga", "ga": {"population_size": 8, "generations_per_inner_iteration": 4,
                                      "inner_iterations_per_epoch": 10}},
}


def write_cfg(tmp_path, raw, name="c.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(raw))
    return str(p)


def test_solve_ga_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["solve", write_cfg(tmp_path, GA), "--out", str(out)]) == 0
    names = {p.name for p in out.iterdir()}
    assert {"structure.json", "phi.ivf", "sigma.ivf", "trace.csv", "profile.csv", "config.yaml",
            "manifest.json"} <= names
    m = json.loads((out / "manifest.json").read_text())
    assert m["converged"] is True and m["method"] == "ga"
    assert m["seeds"] == {"run": 2, "fiber": 2, "ga": 2}
    assert m["rng_algorithm"] == "numpy.random.PCG64"
    assert set(m["files"]) >= {"phi", "sigma", "trace", "profile"}
    header = (out / "trace.csv").read_text().splitlines()[0]
    assert header == "outer,inner,E_t,E_g,E_c,E_a,E_V,V_fluid,seconds"
    assert "volume_error=" in capsys.readouterr().out


def test_manifest_reproduces_run(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["solve", write_cfg(tmp_path, GA), "--out", str(a)]) == 0
    assert main(["solve", str(a / "config.yaml"), "--out", str(b)]) == 0
    for name in ("phi.ivf", "sigma.ivf", "profile.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_flags_override_file(tmp_path):
    out = tmp_path / "o"
    assert main(["solve", write_cfg(tmp_path, GA), "--out", str(out), "--seed", "9",
                 "--V-fluid0", "10", "--set", "solver.ga.population_size=6"]) == 0
    cfg = load_config(out / "config.yaml")
    assert cfg.seed == 9 and cfg.energy.V_fluid0 == 10 and cfg.solver.ga.population_size == 6


def test_mincut_matches_enumeration(tmp_path):
    raw = {"seed": 1, "grid": {"nx": 3, "ny": 2, "nz_paper": 2},
           "fiber": {"fiber_count": 1, "blocks_per_fiber": 1, "block_length": 1.5},
           "energy": {"lambda": 0, "A0": 1.3}, "solver": {"method": "mincut"}}
    out = tmp_path / "m"
    assert main(["solve", write_cfg(tmp_path, raw), "--out", str(out)]) == 0
    cfg = load_config(out / "config.yaml")
    sigma, grid, _ = read_ivf(out / "sigma.ivf")
    phi, _, _ = read_ivf(out / "phi.ivf")
    best, best_sigma = brute_force_min(phi, cfg.energy_params(), grid)
    assert energy_direct(sigma, phi, cfg.energy_params(), grid).E_t0 == pytest.approx(best, abs=1e-9)
    assert np.array_equal(sigma, best_sigma)


def test_config_error_exit_code(tmp_path, capsys):
    raw = {**GA, "solver": {"method": "mincut"}}
    assert main(["solve", write_cfg(tmp_path, raw), "--out", str(tmp_path / "x")]) == 2
    assert "energy.lambda" in capsys.readouterr().err
    assert main(["solve", write_cfg(tmp_path, GA), "--lambda", "5", "--method", "mincut"]) == 2
    assert main(["solve", write_cfg(tmp_path, GA), "--set", "nonsense"]) == 2


def test_non_convergence_exit_code(tmp_path):
    raw = {**GA, "solver": {"method": "ga", "ga": {"max_outer_iterations": 1, "convergence_rel_tol": 1e-15,
                                                   "population_size": 4}}}
    out = tmp_path / "nc"
    assert main(["solve", write_cfg(tmp_path, raw), "--out", str(out)]) == 3
    assert (out / "sigma.ivf").exists()
    assert json.loads((out / "manifest.json").read_text())["converged"] is False


def test_io_error_exit_code(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["fibergen", write_cfg(tmp_path, GA), "--out", str(blocker)]) == 4
    assert main(["solve", str(tmp_path / "missing.yaml")]) == 4
    assert main(["export", str(tmp_path / "missing.ivf")]) == 4


def test_fibergen_then_solve_with_phi(tmp_path):
    gen = tmp_path / "g"
    assert main(["fibergen", write_cfg(tmp_path, GA), "--out", str(gen)]) == 0
    assert not (gen / "sigma.ivf").exists()
    out = tmp_path / "s"
    assert main(["solve", write_cfg(tmp_path, GA), "--out", str(out), "--phi", str(gen / "phi.ivf")]) == 0
    assert (out / "phi.ivf").read_bytes() == (gen / "phi.ivf").read_bytes()
    assert main(["solve", write_cfg(tmp_path, GA), "--set", "grid.nx=5", "--phi", str(gen / "phi.ivf")]) == 2


def test_report_and_export(tmp_path, capsys):
    out = tmp_path / "r"
    main(["solve", write_cfg(tmp_path, GA), "--out", str(out)])
    capsys.readouterr()
    assert main(["report", "--sigma", str(out / "sigma.ivf"), "--phi", str(out / "phi.ivf"),
                 "--V-fluid0", "20"]) == 0
    text = capsys.readouterr().out
    assert "volume_error=" in text and "layer,z,free_cells,ink_cells,saturation" in text
    assert main(["export", str(out / "sigma.ivf"), "--out", str(tmp_path / "s.vtk")]) == 0
    assert (tmp_path / "s.vtk").read_text().startswith("# vtk DataFile")
