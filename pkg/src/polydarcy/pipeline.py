"""End-to-end run: grid, data, assembly, solve, metrics, outputs."""

import os

import numpy as np

from . import mesh as pm
from .assembly import (apply_side_bc, assemble_bulk, assemble_fractured,
                       split_solution)
from .coarsen import (CoarsenParams, agglomerate_by_strength,
                      agglomerate_by_volume)
from .config import RunConfig, parse_config
from .cutgrid import CutParams, cut_cartesian
from .datasets import field_span, ingest_spe10, synthetic_channel_field
from .errors import ConfigError, PolydarcyError
from .export import (export_fracture_vtk, export_vtk, write_line_samples,
                     write_report)
from .fractures import FractureNetwork, build_mixed_mesh, split_network
from .gmsh_io import import_gmsh
from .linalg import export_matrix_coo, matrix_stats, solve_direct
from .metrics import (benchmark_error, relative_l2_error, sample_over_line,
                      upscale_permeability)
from .mvem import stabilization_indices
from .tpfa import solve_tpfa
from .voronoi import VoronoiParams, voronoi_constrained


def _stage(name):
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and isinstance(exc, PolydarcyError):
                raise type(exc)(f"[stage {name}] {exc}") from exc
            return False
    return _Ctx()


def _build_network(cfg):
    if not cfg.fractures:
        return None, [], []
    fr = cfg.fractures
    segments = np.asarray(fr["segments"], float).reshape(-1, 4)
    net = FractureNetwork(segments.reshape(-1, 2, 2), fr["aperture"],
                          fr["k_tangential"], fr["k_normal"])
    branches, inters = split_network(
        net, eps_override=fr.get("eps_intersection"),
        kappa_override=fr.get("kappa_intersection"))
    return net, branches, inters


def _make_grid(cfg, branches, inters):
    backend = cfg.grid_backend
    g = cfg.grid
    if backend == "cartesian":
        mesh = pm.cartesian_mesh(int(g.get("nx", 16)), int(g.get("ny", 16)),
                                 cfg.domain)
        return mesh, None
    if backend == "cut":
        params = CutParams(int(g.get("nx", 16)), int(g.get("ny", 16)),
                           float(g.get("snap_tol", 1e-6)))
        return cut_cartesian(cfg.domain, (branches, inters), params)
    if backend == "voronoi":
        params = VoronoiParams(
            int(g.get("nx", 16)), int(g.get("ny", 16)),
            g.get("delta"), g.get("delta1"), g.get("delta2"),
            float(g.get("merge_tol", 1e-7)))
        return voronoi_constrained(cfg.domain, (branches, inters), params)
    if backend == "gmsh":
        mesh, _constraints = import_gmsh(g["path"])
        return mesh, None
    raise ConfigError(f"unknown grid backend {backend!r}")


def _resolve_permeability(cfg, mesh):
    perm = cfg.permeability
    kind = perm["kind"]
    if kind == "uniform":
        return np.full(mesh.n_cells, float(perm["value"]))
    if kind == "cellwise":
        field = np.loadtxt(perm["path"]).reshape(-1)
        if field.shape[0] != mesh.n_cells:
            raise ConfigError(
                f"cellwise permeability has {field.shape[0]} values for "
                f"{mesh.n_cells} cells")
        return field
    if kind == "spe10":
        field = ingest_spe10(perm["path"], int(perm["layer"]))
        if mesh.n_cells != field.shape[0]:
            raise ConfigError("spe10 permeability needs the 60 x 220 grid")
        return field
    if kind == "synthetic":
        g = cfg.grid
        channels = perm.get("channels")
        return synthetic_channel_field(
            seed=int(perm.get("seed") or 2024),
            n_channels=5 if channels is None else int(channels),
            contrast=float(perm.get("contrast") or 1e4),
            nx=int(g.get("nx", 60)), ny=int(g.get("ny", 220)))
    raise ConfigError(f"unknown permeability kind {kind!r}")


def _side_spec(cfg):
    return {side: (spec["kind"], float(spec.get("value", 0.0)))
            for side, spec in cfg.bc.items()}


def _conformity_tol(cfg):
    if cfg.grid_backend == "cut":
        return max(1e-8, 2.0 * float(cfg.grid.get("snap_tol", 1e-6)))
    if cfg.grid_backend == "voronoi":
        return max(1e-8, 8.0 * float(cfg.grid.get("merge_tol", 1e-7)))
    return 1e-8


def _solve_system(mesh, k_cells, cfg, branches, inters, frac_faces, report,
                  suffix=""):
    tagged, bc = apply_side_bc(mesh, _side_spec(cfg), source=cfg.source)
    mixed = None
    if branches:
        mixed = build_mixed_mesh(tagged, branches, inters,
                                 frac_faces=frac_faces,
                                 tol_rel=_conformity_tol(cfg))
        _inherit_boundary_ends(mixed, cfg, bc)
        system = assemble_fractured(mixed, k_cells, bc)
    else:
        system = assemble_bulk(tagged, k_cells, bc)
    x = solve_direct(system, rtol=float(cfg.solver.get("rtol", 1e-8)))
    sol = split_solution(system, x)
    stats = matrix_stats(system, runs=int(cfg.solver["runs"]),
                         with_condest=bool(cfg.solver["condest"]))
    report[f"n_dof{suffix}"] = stats.n_dof
    report[f"nnz{suffix}"] = stats.nnz
    report[f"nbar{suffix}"] = round(stats.nbar, 12)
    if cfg.solver["condest"]:
        report[f"condest{suffix}"] = float(f"{stats.condest:.6e}")
    report[f"time_solve{suffix}"] = stats.solve_time
    report[f"time_normalized{suffix}"] = stats.time_normalized
    return system, sol, mixed


def _inherit_boundary_ends(mixed, cfg, bc):
    """Fracture ends on a pressure side take that pressure."""
    xmin, ymin, xmax, ymax = cfg.domain
    tol = 1e-10 * max(xmax - xmin, ymax - ymin)
    spec = _side_spec(cfg)
    sides = (("xmin", 0, xmin), ("xmax", 0, xmax),
             ("ymin", 1, ymin), ("ymax", 1, ymax))
    for b, sm in enumerate(mixed.frac_meshes):
        for end, node in ((0, 0), (1, sm.n_nodes - 1)):
            if sm.end_tags[end] != pm.TIP_NOFLOW:
                continue
            x, y = sm.node_xy[node]
            for name, axis, val in sides:
                if abs((x, y)[axis] - val) < tol and spec[name][0] == "pressure":
                    sm.end_tags[end] = pm.END_NATURAL_P
                    bc.frac_end_pressure[(b, end)] = float(spec[name][1])
                    break


def run_pipeline(config, output_dir="."):
    """Run a configuration end to end.

    ``config`` may be a path, a mapping or a :class:`RunConfig`.
    Returns the report dictionary; files are written according to the
    ``outputs`` section.
    """
    cfg = config if isinstance(config, RunConfig) else parse_config(config)
    os.makedirs(output_dir, exist_ok=True)
    report = {}

    with _stage("fractures"):
        net, branches, inters = _build_network(cfg)
        report["n_branches"] = len(branches)
        report["n_intersections"] = len(inters)
        constraint_only = bool(cfg.fractures
                               and cfg.fractures.get("constraint_only"))

    with _stage("grid"):
        mesh, frac_faces = _make_grid(cfg, branches, inters)
        report["grid_backend"] = cfg.grid_backend
        _quality_entries(mesh, report)
        if constraint_only:
            # the network only constrains the grid; no interface physics
            branches, inters, frac_faces = [], [], None

    with _stage("permeability"):
        k_cells = _resolve_permeability(cfg, mesh)
        if k_cells.max() / k_cells.min() > 1e4:
            report["perm_span_decades"] = round(field_span(k_cells), 3)

    p_ref_tpfa = None
    if cfg.reference and cfg.reference.get("scheme") == "tpfa":
        with _stage("reference"):
            tagged, bc = apply_side_bc(mesh, _side_spec(cfg),
                                       source=cfg.source)
            p_ref_tpfa, _ = solve_tpfa(tagged, k_cells, bc)

    ref_solution = None
    if cfg.reference and cfg.reference.get("scheme") == "mvem":
        with _stage("reference"):
            if cfg.permeability["kind"] != "uniform":
                raise ConfigError(
                    "the fine-grid reference supports only uniform matrix "
                    "permeability")
            rg = cfg.reference
            rparams = CutParams(int(rg.get("nx", 96)), int(rg.get("ny", 96)),
                                float(rg.get("snap_tol", 1e-4)))
            rmesh, rff = cut_cartesian(cfg.domain, (branches, inters),
                                       rparams)
            _, rsol, _ = _solve_system(
                rmesh, np.full(rmesh.n_cells,
                               float(cfg.permeability["value"])),
                cfg, branches, inters, rff, {}, suffix="_ref")
            ref_solution = (rmesh, rsol.p_cell)

    fine_mesh = mesh
    fine_k = k_cells
    solutions = {}
    if int(cfg.solver["runs"]) == 0:
        # mesh-only run: generate (and optionally coarsen), no solve
        if cfg.coarsen:
            with _stage("coarsen"):
                protected = [int(f) for ff in (frac_faces or []) for f in ff]
                params = CoarsenParams(cfg.coarsen["mode"],
                                       cfg.coarsen["volume_factor"],
                                       cfg.coarsen["strength_threshold"])
                if params.mode == "by_volume":
                    mesh, _, _ = agglomerate_by_volume(fine_mesh, params,
                                                       protected)
                else:
                    mesh, _, _ = agglomerate_by_strength(fine_mesh, fine_k,
                                                         params, protected)
                _quality_entries(mesh, report, suffix="_coarse")
        with _stage("outputs"):
            out = cfg.outputs
            if out.get("vtk"):
                fields = {"aspect_ratio": pm.cell_aspect_ratios(mesh)}
                if len(k_cells) == mesh.n_cells:
                    fields["permeability"] = np.asarray(k_cells, float)
                export_vtk(mesh, fields,
                           os.path.join(output_dir, out["vtk"]))
            write_report(report, os.path.join(
                output_dir, out.get("report", "report.txt")))
        return report

    if cfg.coarsen:
        with _stage("coarsen"):
            protected = [int(f) for ff in (frac_faces or []) for f in ff]
            params = CoarsenParams(cfg.coarsen["mode"],
                                   cfg.coarsen["volume_factor"],
                                   cfg.coarsen["strength_threshold"])
            if params.mode == "by_volume":
                mesh, cell_map, face_map = agglomerate_by_volume(
                    fine_mesh, params, protected)
            else:
                mesh, cell_map, face_map = agglomerate_by_strength(
                    fine_mesh, fine_k, params, protected)
            if frac_faces is not None:
                frac_faces = [np.array([face_map[f] for f in ff],
                                       dtype=np.int64)
                              for ff in frac_faces]
            report["n_cells_coarse"] = mesh.n_cells
            _quality_entries(mesh, report, suffix="_coarse")
        for mode in cfg.coarsen["upscale"]:
            with _stage(f"solve_{mode}"):
                k_coarse = np.array([
                    upscale_permeability(fine_k[ids], mode,
                                         fine_mesh.cell_area[ids])
                    for ids in cell_map])
                system, sol, mixed = _solve_system(
                    mesh, k_coarse, cfg, branches, inters, frac_faces,
                    report, suffix=f"_{mode}" if len(
                        cfg.coarsen["upscale"]) > 1 else "")
                solutions[mode] = (system, sol, mixed)
                if p_ref_tpfa is not None:
                    err = relative_l2_error(sol.p_cell, p_ref_tpfa, cell_map,
                                            fine_mesh.cell_area)
                    report[f"err_{mode}"] = float(f"{err:.6e}")
        system, sol, mixed = solutions[cfg.coarsen["upscale"][0]]
    else:
        with _stage("solve"):
            system, sol, mixed = _solve_system(mesh, k_cells, cfg, branches,
                                               inters, frac_faces, report)

    with _stage("metrics"):
        kappas = stabilization_indices(mesh, _tensorize(system.k_cells))
        report["kappa_min"] = float(f"{kappas.min():.6e}")
        report["kappa_median"] = float(f"{np.median(kappas):.6e}")
        report["kappa_max"] = float(f"{kappas.max():.6e}")
        if cfg.exact_linear:
            a, gx, gy = cfg.exact_linear
            p_ex = (a + gx * mesh.cell_centroid[:, 0]
                    + gy * mesh.cell_centroid[:, 1])
            scale = max(np.abs(p_ex).max(), 1.0)
            report["err_exact"] = float(
                f"{np.abs(sol.p_cell - p_ex).max() / scale:.6e}")
        if ref_solution is not None:
            err_m, covered = benchmark_error(mesh, sol.p_cell,
                                             ref_solution[0],
                                             ref_solution[1])
            report["err_m"] = float(f"{err_m:.6e}")
            report["overlap_defect"] = float(
                f"{abs(covered - mesh.total_area()) / mesh.total_area():.3e}")

    line_sample = None
    if cfg.line:
        with _stage("line"):
            line_sample = sample_over_line(mesh, sol.p_cell,
                                           cfg.line["p0"], cfg.line["p1"],
                                           int(cfg.line["samples"]))
            report["line_min"] = float(f"{line_sample.values.min():.6e}")
            report["line_max"] = float(f"{line_sample.values.max():.6e}")

    with _stage("outputs"):
        out = cfg.outputs
        if out.get("vtk"):
            export_vtk(mesh, {"pressure": sol.p_cell,
                              "permeability": np.asarray(system.k_cells,
                                                         float)},
                       os.path.join(output_dir, out["vtk"]),
                       face_flux=sol.u_face)
        if out.get("fracture_vtk") and mixed is not None:
            export_fracture_vtk(mixed.frac_meshes,
                                {"pressure": sol.p_frac},
                                os.path.join(output_dir,
                                             out["fracture_vtk"]))
        if out.get("line_csv") and line_sample is not None:
            write_line_samples(line_sample,
                               os.path.join(output_dir, out["line_csv"]))
        if out.get("matrix"):
            export_matrix_coo(system.matrix,
                              os.path.join(output_dir, out["matrix"]))
        report_path = os.path.join(output_dir,
                                   out.get("report", "report.txt"))
        write_report(report, report_path)
    return report


def _tensorize(k_cells):
    k = np.asarray(k_cells, float)
    return k if k.ndim else float(k)


def _quality_entries(mesh, report, suffix=""):
    qs = pm.quality_stats(mesh)
    report[f"n_cells{suffix}"] = mesh.n_cells
    report[f"n_faces{suffix}"] = mesh.n_faces
    report[f"n_nodes{suffix}"] = mesh.n_nodes
    for name in ("aspect", "area", "n_faces_per_cell"):
        key = "n_faces" if name == "n_faces_per_cell" else name
        mn, avg, mx = qs.summary[key]
        report[f"{name}_min{suffix}"] = float(f"{mn:.6e}")
        report[f"{name}_avg{suffix}"] = float(f"{avg:.6e}")
        report[f"{name}_max{suffix}"] = float(f"{mx:.6e}")
