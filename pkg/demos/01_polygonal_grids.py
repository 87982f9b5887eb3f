"""Generate fracture-conforming polygonal grids and compare their quality.

Builds the three grid families on the same small fracture network: a cut
Cartesian grid, a constrained Voronoi grid, and a volume-agglomerated
version of the cut grid.  Prints the shape statistics table and writes
each mesh to a VTK file for inspection.
"""

import os

import numpy as np

from polydarcy import (CoarsenParams, CutParams, FractureNetwork,
                       VoronoiParams, agglomerate_by_volume,
                       cell_aspect_ratios, cut_cartesian, export_vtk,
                       quality_stats, split_network, voronoi_constrained)

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

domain = (0.0, 0.0, 1.0, 1.0)
network = FractureNetwork(
    [[[0.15, 0.25], [0.85, 0.55]],
     [[0.55, 0.15], [0.35, 0.85]],
     [[0.60, 0.70], [0.95, 0.80]]],
    aperture=1e-4, k_tangential=1e4, k_normal=1e4)
branches, intersections = split_network(network)
print(f"network: {network.n_fractures} fractures -> {len(branches)} "
      f"branches, {len(intersections)} intersections")

grids = {}
grids["cut"], cut_faces = cut_cartesian(domain, (branches, intersections),
                                        CutParams(16, 16))
grids["voronoi"], _ = voronoi_constrained(domain, (branches, intersections),
                                          VoronoiParams(16, 16))
protected = [int(f) for chain in cut_faces for f in chain]
grids["cut_coarse"], cell_map, _ = agglomerate_by_volume(
    grids["cut"], CoarsenParams(volume_factor=0.5), protected)

print(f"\n{'grid':<12}{'cells':>7}{'faces':>7}"
      f"{'min area':>11}{'max aspect':>12}{'max faces':>10}")
for name, mesh in grids.items():
    qs = quality_stats(mesh)
    print(f"{name:<12}{mesh.n_cells:>7}{mesh.n_faces:>7}"
          f"{qs.summary['area'][0]:>11.2e}{qs.summary['aspect'][2]:>12.2f}"
          f"{int(qs.summary['n_faces'][2]):>10}")
    export_vtk(mesh, {"aspect_ratio": cell_aspect_ratios(mesh)},
               os.path.join(OUT, f"grid_{name}.vtk"))

print(f"\nagglomeration merged {grids['cut'].n_cells - grids['cut_coarse'].n_cells} "
      "small cells while keeping every fracture face")
print(f"VTK files written to {OUT}")
