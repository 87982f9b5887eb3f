"""Error metrics, permeability upscaling and field sampling."""

from dataclasses import dataclass

import numpy as np
from shapely.geometry import Point, Polygon
from shapely.strtree import STRtree

from .errors import MeshError
from .mesh import cell_loops


def upscale_permeability(values, mode, weights=None):
    """Volume-weighted arithmetic or harmonic mean of a cell cluster."""
    values = np.asarray(values, float)
    if values.size == 0:
        raise ValueError("empty cluster")
    if np.any(values <= 0):
        raise ValueError("non-positive permeability in cluster")
    w = np.ones_like(values) if weights is None else np.asarray(weights, float)
    w = w / w.sum()
    if mode == "arithmetic":
        return float(w @ values)
    if mode == "harmonic":
        return float(1.0 / (w @ (1.0 / values)))
    raise ValueError(f"unknown upscaling mode {mode!r}")


def relative_l2_error(p_coarse, p_ref, cell_map, ref_measures):
    """Relative L2 distance after projecting onto the reference grid.

    ``cell_map`` lists, per coarse cell, the nested reference cells it
    covers; the projection is piecewise constant.
    """
    p_coarse = np.asarray(p_coarse, float)
    p_ref = np.asarray(p_ref, float)
    ref_measures = np.asarray(ref_measures, float)
    seen = np.zeros(p_ref.shape[0], dtype=np.int64)
    proj = np.zeros_like(p_ref)
    for c, fine in enumerate(cell_map):
        for r in fine:
            proj[r] = p_coarse[c]
            seen[r] += 1
    if np.any(seen != 1):
        raise MeshError("projection does not partition the reference cells")
    num = np.sqrt(np.sum(ref_measures * (proj - p_ref) ** 2))
    den = np.sqrt(np.sum(ref_measures * p_ref ** 2))
    if den == 0:
        raise ValueError("reference field has zero norm")
    return float(num / den)


def cell_polygon(mesh, c):
    """Shapely polygon of a cell (holes included)."""
    loops = cell_loops(mesh, c)
    shell = [tuple(mesh.node_xy[n]) for n in loops[0]]
    holes = [[tuple(mesh.node_xy[n]) for n in lp] for lp in loops[1:]]
    return Polygon(shell, holes)


def benchmark_error(mesh_m, p_m, mesh_ref, p_ref, dp_ref=None):
    """Pressure mismatch against a reference grid via cell overlaps.

    The squared error is the overlap-area-weighted squared pressure
    difference, normalized by the domain area and the squared maximum
    pressure variation of the reference field.  Also returns the total
    overlap area for sanity checking.
    """
    p_m = np.asarray(p_m, float)
    p_ref = np.asarray(p_ref, float)
    if dp_ref is None:
        dp_ref = float(p_ref.max() - p_ref.min())
    if dp_ref == 0:
        raise ValueError("reference pressure variation is zero")
    ref_polys = [cell_polygon(mesh_ref, r) for r in range(mesh_ref.n_cells)]
    tree = STRtree(ref_polys)
    omega = mesh_m.total_area()
    total = 0.0
    covered = 0.0
    for c in range(mesh_m.n_cells):
        poly = cell_polygon(mesh_m, c)
        for r in tree.query(poly):
            inter = poly.intersection(ref_polys[int(r)])
            a = inter.area
            if a <= 0:
                continue
            covered += a
            total += a * (p_m[c] - p_ref[int(r)]) ** 2
    err = np.sqrt(total / (omega * dp_ref**2))
    return float(err), float(covered)


@dataclass
class LineSample:
    """Pressure sampled along a straight line."""
    p0: np.ndarray
    p1: np.ndarray
    params: np.ndarray
    points: np.ndarray
    values: np.ndarray
    cells: np.ndarray


def sample_over_line(mesh, p_cells, p0, p1, n_samples=200):
    """Cell pressures at evenly spaced points of a segment.

    Each sample takes the value of the cell containing the point; points
    on shared faces resolve to the smallest cell id.
    """
    p0 = np.asarray(p0, float)
    p1 = np.asarray(p1, float)
    params = np.linspace(0.0, 1.0, n_samples)
    pts = p0 + params[:, None] * (p1 - p0)
    polys = [cell_polygon(mesh, c) for c in range(mesh.n_cells)]
    tree = STRtree(polys)
    values = np.empty(n_samples)
    cells = np.full(n_samples, -1, dtype=np.int64)
    for k, xy in enumerate(pts):
        pt = Point(xy)
        hits = sorted(int(i) for i in tree.query(pt, predicate="intersects"))
        best = -1
        for c in hits:
            if polys[c].covers(pt):
                best = c
                break
        if best < 0:
            # tolerate boundary round-off by nudging to the nearest cell
            dists = [(polys[c].distance(pt), c) for c in hits] or \
                [(polys[c].distance(pt), c) for c in range(mesh.n_cells)]
            d, best = min(dists)
            if d > 1e-9 * mesh.cell_diameter.max():
                raise MeshError(f"sample point {xy} lies outside the mesh")
        cells[k] = best
        values[k] = p_cells[best]
    return LineSample(p0, p1, params, pts, values, cells)


def histogram(values, n_bins):
    """Equal-width histogram spanning [min, max].

    Returns ``(counts, edges)``; counts always sum to the sample size.
    """
    values = np.asarray(values, float)
    if values.size == 0:
        raise ValueError("empty input")
    lo, hi = float(values.min()), float(values.max())
    if hi - lo <= 1e-12 * max(abs(lo), abs(hi), 1.0):
        counts = np.zeros(n_bins, dtype=np.int64)
        counts[0] = values.size
        edges = np.linspace(lo - 0.5, hi + 0.5, n_bins + 1)
        return counts, edges
    counts, edges = np.histogram(values, bins=n_bins, range=(lo, hi))
    return counts.astype(np.int64), edges
