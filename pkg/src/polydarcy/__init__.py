"""Darcy flow in fractured porous media on general polygonal grids.

A lowest-order mixed virtual element solver with fracture-aware grid
generators (Cartesian cut, constrained Voronoi, agglomeration, MSH
import), mortar-type fracture coupling, a two-point reference scheme and
the metrics used to assess heterogeneous and fractured test cases.
"""

from .assembly import (BoundaryConditions, DofMap, SparseSystem,
                       apply_side_bc, assemble_bulk, assemble_fractured,
                       conservation_residuals, dirichlet_everywhere,
                       split_solution)
from .coarsen import (CoarsenParams, agglomerate_by_strength,
                      agglomerate_by_volume)
from .config import RunConfig, load_preset, parse_config, preset_path
from .cutgrid import CutParams, cut_cartesian
from .datasets import ingest_spe10, synthetic_channel_field
from .errors import (ConfigError, ConformityError, GeometryError, MeshError,
                     NumericalError, ParseError, PolydarcyError)
from .export import (export_fracture_vtk, export_vtk, read_report,
                     write_line_samples, write_report)
from .fractures import (Branch, FractureNetwork, IntersectionPoint,
                        MixedDimMesh, build_mixed_mesh, split_network)
from .gmsh_io import import_gmsh
from .linalg import (MatrixStats, condest_1norm, consolidate_triplets,
                     export_matrix_coo, matrix_stats, solve_direct)
from .mesh import (PolyMesh, QualityReport, SegmentMesh, aspect_ratio,
                   boundary_faces_on_side, build_poly_mesh, cartesian_mesh,
                   cell_aspect_ratios, cell_loops, faces_on_segment,
                   mesh_from_cell_loops, quality_stats)
from .metrics import (LineSample, benchmark_error, cell_polygon, histogram,
                      relative_l2_error, sample_over_line,
                      upscale_permeability)
from .mvem import (local_consistency, local_divergence, local_matrices,
                   local_matrices_1d, local_projection, local_stabilization,
                   stabilization_index, stabilization_indices)
from .pipeline import run_pipeline
from .tpfa import solve_tpfa, tpfa_transmissibility
from .voronoi import VoronoiParams, voronoi_constrained

__version__ = "0.1.0"
