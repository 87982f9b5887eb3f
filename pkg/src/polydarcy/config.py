"""Run configuration: schema, validation, presets.

Configurations are YAML trees; :func:`parse_config` validates against
the schema below and fills defaults.  In strict mode unknown keys are
rejected.

Top-level keys: ``domain`` (xmin, ymin, xmax, ymax), ``grid`` (exactly
one backend section: ``cartesian``/``cut``/``voronoi``/``gmsh``),
``bc`` (one spec per side), and optionally ``permeability``,
``fractures``, ``coarsen``, ``reference``, ``line``, ``exact_linear``,
``solver``, ``outputs``.
"""

import importlib.resources as resources
import os
from dataclasses import dataclass, field

import numpy as np
import yaml

from .errors import ConfigError

GRID_BACKENDS = ("cartesian", "cut", "voronoi", "gmsh")

_SIDE_KEYS = ("xmin", "xmax", "ymin", "ymax")

_SCHEMA = {
    "domain": None,
    "grid": {"cartesian": {"nx": None, "ny": None},
             "cut": {"nx": None, "ny": None, "snap_tol": None},
             "voronoi": {"nx": None, "ny": None, "delta": None,
                         "delta1": None, "delta2": None, "merge_tol": None},
             "gmsh": {"path": None}},
    "bc": {k: {"kind": None, "value": None} for k in _SIDE_KEYS},
    "source": None,
    "permeability": {"kind": None, "value": None, "path": None,
                     "layer": None, "seed": None, "channels": None,
                     "contrast": None},
    "fractures": {"builtin": None, "segments": None, "aperture": None,
                  "k_tangential": None, "k_normal": None,
                  "eps_intersection": None, "kappa_intersection": None,
                  "constraint_only": None},
    "coarsen": {"mode": None, "volume_factor": None,
                "strength_threshold": None, "upscale": None},
    "reference": {"scheme": None, "nx": None, "ny": None,
                  "snap_tol": None},
    "line": {"p0": None, "p1": None, "samples": None},
    "exact_linear": None,
    "solver": {"runs": None, "condest": None, "rtol": None},
    "outputs": {"vtk": None, "fracture_vtk": None, "report": None,
                "line_csv": None, "matrix": None},
}


def _benchmark3_segments():
    """Ten-fracture network with six intersections, one L-shaped.

    The two steep fractures in the lower-right quadrant meet exactly at
    their common endpoint, forming the L; the others produce five
    crossings.  Fractures 4 and 5 (1-based) act as low-permeable
    barriers in the presets.
    """
    segs = np.array([
        [0.0500, 0.4160, 0.2200, 0.0624],
        [0.0500, 0.2750, 0.2500, 0.1350],
        [0.1500, 0.6300, 0.4500, 0.0900],
        [0.1500, 0.9167, 0.4000, 0.5000],
        [0.6500, 0.8333, 0.849723, 0.167625],
        [0.7000, 0.2350, 0.849723, 0.167625],
        [0.6000, 0.3800, 0.8500, 0.2675],
        [0.3500, 0.9714, 0.8000, 0.7143],
        [0.7500, 0.9574, 0.9500, 0.8155],
        [0.1500, 0.8363, 0.4000, 0.9727],
    ])
    return segs


BUILTIN_NETWORKS = {
    "benchmark3": {
        "segments": _benchmark3_segments,
        "aperture": 1e-4,
        # conductive fractures, with two low-permeable barriers
        "k_tangential": [1e4, 1e4, 1e4, 1e-4, 1e-4, 1e4, 1e4, 1e4, 1e4, 1e4],
        "k_normal": [1e4, 1e4, 1e4, 1e-4, 1e-4, 1e4, 1e4, 1e4, 1e4, 1e4],
    },
}

BENCHMARK3_BARRIERS = (3, 4)  # zero-based fracture indices


@dataclass
class RunConfig:
    """Validated configuration tree."""
    domain: tuple
    grid_backend: str
    grid: dict
    bc: dict
    source: float = None
    permeability: dict = field(default_factory=lambda: {"kind": "uniform",
                                                        "value": 1.0})
    fractures: dict = None
    coarsen: dict = None
    reference: dict = None
    line: dict = None
    exact_linear: tuple = None
    solver: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)


def _check_keys(tree, schema, path, strict):
    if not isinstance(tree, dict):
        raise ConfigError(f"section {path or 'top level'} must be a mapping")
    for key, val in tree.items():
        if key not in schema:
            msg = f"unknown key {path + key!r}"
            if strict:
                raise ConfigError(msg)
            continue
        sub = schema[key]
        if isinstance(sub, dict) and isinstance(val, dict):
            _check_keys(val, sub, path + key + ".", strict)


def _require(tree, key, where="configuration"):
    if key not in tree or tree[key] is None:
        raise ConfigError(f"missing mandatory key {key!r} in {where}")
    return tree[key]


def parse_config(path_or_dict, strict=True, overrides=None):
    """Load and validate a configuration.

    ``path_or_dict`` may be a YAML file path or an already-loaded
    mapping; ``overrides`` is merged on top before validation (nested
    dicts merge key-wise).
    """
    if isinstance(path_or_dict, dict):
        tree = dict(path_or_dict)
    else:
        try:
            with open(path_or_dict) as fh:
                tree = yaml.safe_load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path_or_dict}: {exc}")
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed YAML in {path_or_dict}: {exc}")
    if not isinstance(tree, dict):
        raise ConfigError("configuration must be a mapping")
    if overrides:
        tree = _merge(tree, overrides)
    _check_keys(tree, _SCHEMA, "", strict)

    domain = _require(tree, "domain")
    try:
        domain = tuple(float(v) for v in domain)
    except (TypeError, ValueError):
        raise ConfigError("domain must be four numbers "
                          "(xmin, ymin, xmax, ymax)")
    if len(domain) != 4 or not (domain[2] > domain[0]
                                and domain[3] > domain[1]):
        raise ConfigError("domain must be a non-degenerate rectangle")

    grid = _require(tree, "grid")
    backends = [k for k in grid if k in GRID_BACKENDS]
    if len(backends) != 1:
        raise ConfigError("grid must name exactly one grid backend, got "
                          f"{backends or list(grid)}")
    backend = backends[0]
    grid_params = dict(grid[backend] or {})
    if backend == "gmsh":
        mesh_path = _require(grid_params, "path", "grid.gmsh")
        if not os.path.exists(mesh_path):
            raise ConfigError(f"mesh file {mesh_path} does not exist")

    bc = _require(tree, "bc")
    for side in _SIDE_KEYS:
        spec = _require(bc, side, "bc")
        kind = _require(spec, "kind", f"bc.{side}")
        if kind not in ("pressure", "flux"):
            raise ConfigError(f"bc.{side}.kind must be pressure or flux")
        val = spec.get("value", 0.0)
        if not isinstance(val, (int, float)):
            raise ConfigError(f"bc.{side}.value must be a number")

    perm = dict(tree.get("permeability") or {"kind": "uniform", "value": 1.0})
    kind = perm.setdefault("kind", "uniform")
    if kind not in ("uniform", "cellwise", "spe10", "synthetic"):
        raise ConfigError(f"unknown permeability kind {kind!r}")
    if kind == "uniform":
        perm.setdefault("value", 1.0)
        if not isinstance(perm["value"], (int, float)) or perm["value"] <= 0:
            raise ConfigError("uniform permeability must be positive")
    if kind in ("cellwise", "spe10"):
        p = _require(perm, "path", "permeability")
        if not os.path.exists(p):
            raise ConfigError(f"permeability file {p} does not exist")
    if kind == "spe10":
        _require(perm, "layer", "permeability")

    fractures = tree.get("fractures")
    if fractures:
        fractures = dict(fractures)
        if "builtin" in fractures and fractures["builtin"]:
            name = fractures.pop("builtin")
            if name not in BUILTIN_NETWORKS:
                raise ConfigError(f"unknown builtin network {name!r}")
            base = BUILTIN_NETWORKS[name]
            fractures.setdefault("segments", base["segments"]())
            for key in ("aperture", "k_tangential", "k_normal"):
                fractures.setdefault(key, base[key])
        if "segments" not in fractures:
            raise ConfigError("fractures need segments or a builtin name")
        for key, default in (("aperture", 1e-4), ("k_tangential", 1.0),
                             ("k_normal", 1.0)):
            fractures.setdefault(key, default)
        fractures.setdefault("constraint_only", False)

    coarsen = tree.get("coarsen")
    if coarsen:
        coarsen = dict(coarsen)
        coarsen.setdefault("mode", "by_volume")
        coarsen.setdefault("volume_factor", 0.5)
        coarsen.setdefault("strength_threshold", 0.25)
        ups = coarsen.setdefault("upscale", "arithmetic")
        if isinstance(ups, str):
            coarsen["upscale"] = [ups]
        for u in coarsen["upscale"]:
            if u not in ("arithmetic", "harmonic"):
                raise ConfigError(f"unknown upscaling mode {u!r}")

    exact = tree.get("exact_linear")
    if exact is not None:
        exact = tuple(float(v) for v in exact)
        if len(exact) != 3:
            raise ConfigError("exact_linear must be (const, grad_x, grad_y)")

    solver = dict(tree.get("solver") or {})
    solver.setdefault("runs", 1)
    solver.setdefault("condest", True)

    line = tree.get("line")
    if line:
        line = dict(line)
        _require(line, "p0", "line")
        _require(line, "p1", "line")
        line.setdefault("samples", 200)

    return RunConfig(domain=domain, grid_backend=backend, grid=grid_params,
                     bc=bc, source=tree.get("source"),
                     permeability=perm, fractures=fractures, coarsen=coarsen,
                     reference=tree.get("reference"), line=line,
                     exact_linear=exact, solver=solver,
                     outputs=dict(tree.get("outputs") or {}), raw=tree)


def _merge(base, extra):
    out = dict(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def preset_path(name):
    """Filesystem path of a packaged preset configuration."""
    ref = resources.files("polydarcy") / "presets" / f"{name}.yaml"
    if not ref.is_file():
        avail = sorted(p.name[:-5] for p in
                       (resources.files("polydarcy") / "presets").iterdir()
                       if p.name.endswith(".yaml"))
        raise ConfigError(f"unknown preset {name!r}; available: {avail}")
    return str(ref)


def load_preset(name, overrides=None, strict=True):
    return parse_config(preset_path(name), strict=strict,
                        overrides=overrides)
