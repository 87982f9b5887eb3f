import os
import subprocess
import sys

import numpy as np
import pytest

from conftest import fixture_path
from polydarcy.config import load_preset, parse_config
from polydarcy.export import read_report
from polydarcy.pipeline import run_pipeline

BASE_BC = {"xmin": {"kind": "pressure", "value": 1.0},
           "xmax": {"kind": "pressure", "value": 0.0},
           "ymin": {"kind": "flux", "value": 0.0},
           "ymax": {"kind": "flux", "value": 0.0}}


def small_config(**extra):
    cfg = {"domain": [0, 0, 1, 1],
           "grid": {"cartesian": {"nx": 4, "ny": 4}},
           "bc": BASE_BC,
           "exact_linear": [1.0, -1.0, 0.0],
           "outputs": {"report": "report.txt"}}
    cfg.update(extra)
    return cfg


def test_pipeline_patch_run(tmp_path):
    report = run_pipeline(small_config(), str(tmp_path))
    assert report["err_exact"] < 1e-10
    assert os.path.exists(tmp_path / "report.txt")


def test_pipeline_gmsh_backend(tmp_path):
    cfg = small_config(grid={"gmsh": {"path": fixture_path(
        "square_tri8.msh")}})
    report = run_pipeline(cfg, str(tmp_path))
    assert report["n_cells"] == 8
    assert report["err_exact"] < 1e-10


def test_pipeline_stage_errors_are_labeled(tmp_path):
    cfg = small_config(fractures={"segments": [[0.0, 0.37, 1.0, 0.37]]})
    with pytest.raises(Exception, match=r"\[stage "):
        run_pipeline(cfg, str(tmp_path))


def test_fracture_ends_inherit_boundary_pressure(tmp_path):
    # spanning conductive fracture aligned with the flow leaves the
    # linear solution exact only if its ends take the side pressures
    cfg = small_config(fractures={"segments": [[0.0, 0.5, 1.0, 0.5]],
                                  "aperture": 1e-6, "k_tangential": 1.0,
                                  "k_normal": 1e12})
    report = run_pipeline(cfg, str(tmp_path))
    assert report["err_exact"] < 1e-9


def test_preset_reports_deterministic(tmp_path):
    overrides = {"grid": {"cut": {"nx": 16, "ny": 16}},
                 "reference": {"nx": 24, "ny": 24},
                 "solver": {"runs": 1, "condest": False}}
    cfg = load_preset("benchmark3_cut", overrides=overrides)
    run_pipeline(cfg, str(tmp_path / "a"))
    cfg2 = load_preset("benchmark3_cut", overrides=overrides)
    run_pipeline(cfg2, str(tmp_path / "b"))
    ra = read_report(tmp_path / "a" / "report.txt")
    rb = read_report(tmp_path / "b" / "report.txt")
    keys = [k for k in ra if not k.startswith("time")]
    assert keys == [k for k in rb if not k.startswith("time")]
    for k in keys:
        assert ra[k] == rb[k], k


def test_all_presets_run_reduced(tmp_path):
    reduced = {
        "patch_test": {"grid": {"cut": {"nx": 4, "ny": 4}}},
        "spe10_l4": {"grid": {"cartesian": {"nx": 15, "ny": 55}},
                     "coarsen": {"volume_factor": 0.25}},
        "spe10_l35": {"grid": {"cartesian": {"nx": 15, "ny": 55}},
                      "coarsen": {"volume_factor": 0.25}},
        "benchmark3_cut": {"grid": {"cut": {"nx": 16, "ny": 16}},
                           "reference": {"nx": 24, "ny": 24}},
        "benchmark3_voronoi": {"grid": {"voronoi": {"nx": 14, "ny": 14}},
                               "reference": {"nx": 24, "ny": 24}},
        "benchmark3_cut_coarse": {"grid": {"cut": {"nx": 16, "ny": 16}},
                                  "reference": {"nx": 24, "ny": 24}},
        "benchmark3_voronoi_coarse": {
            "grid": {"voronoi": {"nx": 14, "ny": 14}},
            "reference": {"nx": 24, "ny": 24}},
    }
    for name, overrides in reduced.items():
        overrides = dict(overrides)
        overrides.setdefault("solver", {"runs": 1, "condest": False})
        cfg = load_preset(name, overrides=overrides)
        report = run_pipeline(cfg, str(tmp_path / name))
        assert report["n_cells"] > 0, name


def test_synthetic_spe10_needs_grid_match(tmp_path):
    cfg = small_config(permeability={"kind": "spe10", "path": "x",
                                     "layer": 1})
    from polydarcy.errors import ConfigError
    with pytest.raises(ConfigError):
        parse_config(cfg)


def test_cellwise_permeability(tmp_path):
    field = np.linspace(1.0, 2.0, 16)
    path = tmp_path / "k.txt"
    np.savetxt(path, field)
    cfg = small_config(permeability={"kind": "cellwise", "path": str(path)})
    report = run_pipeline(cfg, str(tmp_path))
    assert report["n_cells"] == 16


def _run_cli(*args):
    return subprocess.run([sys.executable, "-m", "polydarcy", *args],
                          capture_output=True, text=True)


def test_cli_solve_and_exit_codes(tmp_path):
    import yaml
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(small_config()))
    out = _run_cli("solve", "--config", str(path), "--output-dir",
                   str(tmp_path))
    assert out.returncode == 0
    assert "err_exact" in out.stdout

    bad = tmp_path / "bad.yaml"
    bad.write_text("grid: {}\n")
    out = _run_cli("solve", "--config", str(bad))
    assert out.returncode == 2

    missing = _run_cli("solve", "--config", str(tmp_path / "nope.yaml"))
    assert missing.returncode == 2

    # numeric/mesh failure inside the pipeline maps to exit code 3
    nonconf = tmp_path / "nonconf.yaml"
    nonconf.write_text(yaml.safe_dump(small_config(
        fractures={"segments": [[0.0, 0.37, 1.0, 0.37]]})))
    out = _run_cli("solve", "--config", str(nonconf))
    assert out.returncode == 3


def test_cli_mesh_and_preset(tmp_path):
    import yaml
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(small_config(
        outputs={"report": "mesh_report.txt", "vtk": "mesh.vtk"})))
    out = _run_cli("mesh", "--config", str(path), "--output-dir",
                   str(tmp_path))
    assert out.returncode == 0
    assert (tmp_path / "mesh_report.txt").exists()
    assert (tmp_path / "mesh.vtk").exists()

    out = _run_cli("preset", "patch_test", "--output-dir", str(tmp_path))
    assert out.returncode == 0
    assert "err_exact" in out.stdout

    out = _run_cli("preset", "no_such")
    assert out.returncode == 2


def test_gmsh_backend_with_fractures(tmp_path):
    # imported triangulation whose tagged faces line up with the network
    cfg = small_config(
        grid={"gmsh": {"path": fixture_path("square_frac.msh")}},
        fractures={"segments": [[0.0, 0.5, 1.0, 0.5]], "aperture": 1e-4,
                   "k_tangential": 1e4, "k_normal": 1e-4})
    cfg.pop("exact_linear")
    report = run_pipeline(cfg, str(tmp_path))
    assert report["n_branches"] == 1
    assert report["n_cells"] == 8


def test_voronoi_with_boundary_touching_fracture(tmp_path):
    # fracture perpendicular to the flow, spanning wall to wall
    cfg = {"domain": [0, 0, 1, 1],
           "grid": {"voronoi": {"nx": 8, "ny": 8}},
           "fractures": {"segments": [[0.5, 0.0, 0.5, 1.0]],
                         "aperture": 1e-4, "k_tangential": 1.0,
                         "k_normal": 1e-4},
           "bc": BASE_BC,
           "outputs": {"report": "report.txt"}}
    report = run_pipeline(cfg, str(tmp_path))
    # strong barrier: most of the pressure drop happens at the interface
    assert report["n_branches"] == 1
    assert report["n_dof"] > 0
