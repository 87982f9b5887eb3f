import numpy as np
import pytest

from polydarcy.cutgrid import CutParams, cut_cartesian
from polydarcy.errors import GeometryError
from polydarcy.fractures import FractureNetwork, split_network
from polydarcy.mesh import quality_stats


def net(segments):
    return FractureNetwork(segments, 1e-4, 1.0, 1.0)


def test_params_validation():
    with pytest.raises(GeometryError):
        CutParams(0, 4)
    with pytest.raises(GeometryError):
        CutParams(4, 4, snap_tol=0.5)


def test_axis_aligned_split():
    mesh, ff = cut_cartesian((0, 0, 1, 1), net([[[0.0, 0.5], [1.0, 0.5]]]),
                             CutParams(1, 1))
    assert mesh.n_cells == 2
    assert len(ff[0]) == 1
    assert mesh.total_area() == pytest.approx(1.0, rel=1e-12)


def test_tip_triple_split():
    # hand-drawn oracle: entry point, tip, two connectors to the right
    # edge corners give three polygons over eight faces
    mesh, ff = cut_cartesian((0, 0, 1, 1), net([[[0.0, 0.5], [0.5, 0.5]]]),
                             CutParams(1, 1))
    assert mesh.n_cells == 3
    assert mesh.n_faces == 8
    assert mesh.total_area() == pytest.approx(1.0, rel=1e-12)
    areas = sorted(mesh.cell_area)
    assert areas == pytest.approx([0.25, 0.375, 0.375])


def test_cut_preserves_area_and_conformity():
    network = net([[[0.12, 0.2], [0.83, 0.74]], [[0.2, 0.8], [0.75, 0.25]],
                   [[0.5, 0.05], [0.5, 0.55]]])
    branches, inters = split_network(network)
    mesh, ff = cut_cartesian((0, 0, 1, 1), (branches, inters),
                             CutParams(8, 8))
    assert mesh.total_area() == pytest.approx(1.0, rel=1e-10)
    for br, ids in zip(branches, ff):
        chain = mesh.face_length[ids].sum()
        assert chain == pytest.approx(br.length, rel=1e-9)


def test_cut_generic_cells_validate():
    mesh, _ = cut_cartesian((0, 0, 1, 1), net([[[0.03, 0.11], [0.94, 0.87]]]),
                            CutParams(6, 6))
    qs = quality_stats(mesh)
    assert qs.summary["area"][0] > 0
    assert qs.summary["n_faces"][0] >= 3


def test_junction_cell_four_way_split():
    branches, inters = split_network(net([[[0.1, 0.1], [0.9, 0.9]],
                                          [[0.1, 0.9], [0.9, 0.1]]]))
    mesh, ff = cut_cartesian((0, 0, 1, 1), (branches, inters),
                             CutParams(3, 3))
    assert mesh.total_area() == pytest.approx(1.0, rel=1e-10)
    for br, ids in zip(branches, ff):
        assert mesh.face_length[ids].sum() == pytest.approx(br.length,
                                                            rel=1e-9)


def test_snap_disabled_node_hit_raises():
    network = net([[[0.0, 0.0], [1.0, 1.0]]])
    with pytest.raises(GeometryError, match="snapping"):
        cut_cartesian((0, 0, 1, 1), network, CutParams(2, 2, snap_tol=0.0))


def test_fracture_outside_domain_rejected():
    with pytest.raises(GeometryError, match="outside"):
        cut_cartesian((0, 0, 1, 1), net([[[0.5, 0.5], [1.5, 0.5]]]),
                      CutParams(2, 2))


def test_snapping_removes_micro_edges():
    # fracture passing 1e-8 away from a grid node; snapping absorbs it
    network = net([[[0.0, 0.5 + 1e-8], [1.0, 0.5 + 1e-8]]])
    mesh, _ = cut_cartesian((0, 0, 1, 1), network, CutParams(2, 2,
                                                             snap_tol=1e-4))
    assert mesh.cell_area.min() > 1e-3


def test_benchmark_scale_cell_count():
    from polydarcy.config import BUILTIN_NETWORKS
    b = BUILTIN_NETWORKS["benchmark3"]
    network = FractureNetwork(np.asarray(b["segments"]()).reshape(-1, 2, 2),
                              b["aperture"], b["k_tangential"], b["k_normal"])
    branches, inters = split_network(network)
    mesh, ff = cut_cartesian((0, 0, 1, 1), (branches, inters),
                             CutParams(34, 34, 1e-3))
    # order-of-magnitude check against the published grid size
    assert 900 <= mesh.n_cells <= 1800
    assert mesh.total_area() == pytest.approx(1.0, rel=1e-10)
