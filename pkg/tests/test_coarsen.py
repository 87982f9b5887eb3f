import numpy as np
import pytest

from polydarcy.coarsen import (CoarsenParams, agglomerate_by_strength,
                               agglomerate_by_volume,
                               tpfa_face_transmissibility)
from polydarcy.cutgrid import CutParams, cut_cartesian
from polydarcy.errors import GeometryError
from polydarcy.fractures import FractureNetwork, split_network
from polydarcy.mesh import cartesian_mesh, quality_stats


def test_params_validation():
    with pytest.raises(GeometryError):
        CoarsenParams(mode="fancy")
    with pytest.raises(GeometryError):
        CoarsenParams(volume_factor=0.0)
    with pytest.raises(GeometryError):
        CoarsenParams(strength_threshold=1.5)


def test_uniform_mesh_unchanged():
    m = cartesian_mesh(5, 5)
    coarse, cell_map, face_map = agglomerate_by_volume(m)
    assert coarse.n_cells == m.n_cells
    assert all(len(g) == 1 for g in cell_map)
    assert np.all(face_map >= 0)


def test_slivers_merged_and_area_preserved():
    network = FractureNetwork([[[0.0, 0.52], [1.0, 0.48]]], 1e-4, 1.0, 1.0)
    branches, inters = split_network(network)
    mesh, ff = cut_cartesian((0, 0, 1, 1), (branches, inters),
                             CutParams(10, 10))
    protected = [int(f) for f in ff[0]]
    before = quality_stats(mesh).summary["area"][0]
    coarse, cell_map, face_map = agglomerate_by_volume(
        mesh, CoarsenParams(volume_factor=0.5), protected)
    after = quality_stats(coarse).summary["area"][0]
    assert coarse.n_cells < mesh.n_cells
    assert after > 10 * before
    assert coarse.total_area() == pytest.approx(mesh.total_area(), rel=1e-12)
    # fracture faces survive with identical geometry
    kept = [face_map[f] for f in protected]
    assert all(k >= 0 for k in kept)
    assert coarse.face_length[kept].sum() == pytest.approx(
        mesh.face_length[protected].sum(), rel=1e-14)


def test_never_merges_across_fracture():
    m = cartesian_mesh(2, 1)
    shared = [f for f in m.interior_faces()]
    # both cells are below any threshold; the only candidate face is
    # protected, so nothing merges
    coarse, cell_map, _ = agglomerate_by_volume(
        m, CoarsenParams(volume_factor=1.0), protected_faces=shared)
    assert coarse.n_cells == 2


def test_strength_homogeneous_targets_count():
    m = cartesian_mesh(12, 12)
    coarse, cell_map, _ = agglomerate_by_strength(
        m, np.ones(m.n_cells),
        CoarsenParams(mode="by_strength", volume_factor=0.25))
    assert coarse.n_cells == pytest.approx(36, abs=8)
    assert coarse.total_area() == pytest.approx(1.0, rel=1e-12)


def test_strength_respects_contrast():
    m = cartesian_mesh(3, 1)
    k = np.array([1.0, 1.0, 1e-6])
    coarse, cell_map, _ = agglomerate_by_strength(
        m, k, CoarsenParams(mode="by_strength", volume_factor=1 / 3))
    assert sorted(map(sorted, cell_map)) == [[0, 1], [2]]


def test_strength_keeps_channels_apart():
    m = cartesian_mesh(20, 10)
    k = np.ones(m.n_cells)
    row = np.arange(m.n_cells) // 20
    k[(row == 4) | (row == 5)] = 1e4
    coarse, cell_map, _ = agglomerate_by_strength(
        m, k, CoarsenParams(mode="by_strength", volume_factor=0.25))
    for group in cell_map:
        assert len({float(k[c]) for c in group}) == 1


def test_strength_rejects_nonpositive_permeability():
    m = cartesian_mesh(2, 2)
    with pytest.raises(GeometryError):
        tpfa_face_transmissibility(m, np.array([1.0, -1.0, 1.0, 1.0]))


def test_aggregate_cells_pass_patch_test():
    from polydarcy.assembly import (assemble_bulk, dirichlet_everywhere,
                                    split_solution)
    from polydarcy.linalg import solve_direct
    network = FractureNetwork([[[0.0, 0.52], [1.0, 0.44]]], 1e-4, 1.0, 1.0)
    branches, inters = split_network(network)
    mesh, ff = cut_cartesian((0, 0, 1, 1), (branches, inters),
                             CutParams(6, 6))
    coarse, _, _ = agglomerate_by_volume(mesh,
                                         CoarsenParams(volume_factor=0.6))
    p_fn = lambda x, y: 0.3 - 1.2 * x + 0.7 * y
    mt, bc = dirichlet_everywhere(coarse, p_fn)
    system = assemble_bulk(mt, 1.0, bc)
    sol = split_solution(system, solve_direct(system))
    exact = np.array([p_fn(x, y) for x, y in mt.cell_centroid])
    assert np.abs(sol.p_cell - exact).max() < 1e-10
