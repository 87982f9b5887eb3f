import numpy as np
import pytest

from polydarcy.errors import GeometryError
from polydarcy.fractures import FractureNetwork, split_network
from polydarcy.mesh import cartesian_mesh
from polydarcy.voronoi import VoronoiParams, voronoi_constrained


def net(segments, **kw):
    kw.setdefault("aperture", 1e-4)
    kw.setdefault("k_tangential", 1.0)
    kw.setdefault("k_normal", 1.0)
    return FractureNetwork(segments, **kw)


def test_lattice_reproduces_cartesian_exactly():
    m, ff = voronoi_constrained((0, 0, 1, 1), ([], []), VoronoiParams(4, 4))
    ref = cartesian_mesh(4, 4)
    assert m.n_cells == ref.n_cells
    assert m.n_faces == ref.n_faces
    a = np.array(sorted(map(tuple, m.node_xy)))
    b = np.array(sorted(map(tuple, ref.node_xy)))
    assert np.abs(a - b).max() < 1e-12


def test_pair_seeds_make_face_on_fracture():
    branches, inters = split_network(net([[[0.25, 0.5], [0.75, 0.5]]]))
    m, ff = voronoi_constrained((0, 0, 1, 1), (branches, inters),
                                VoronoiParams(8, 8))
    ids = ff[0]
    assert len(ids) >= 1
    mids = m.face_midpoints()[ids]
    assert np.abs(mids[:, 1] - 0.5).max() < 1e-9
    assert m.face_length[ids].sum() == pytest.approx(0.5, rel=1e-9)


def test_conformity_for_tilted_fracture():
    branches, inters = split_network(net([[[0.21, 0.33], [0.77, 0.69]]]))
    m, ff = voronoi_constrained((0, 0, 1, 1), (branches, inters),
                                VoronoiParams(8, 8))
    assert m.total_area() == pytest.approx(1.0, rel=1e-9)
    assert m.face_length[ff[0]].sum() == pytest.approx(branches[0].length,
                                                       rel=1e-9)


def test_crossing_fractures_conform():
    branches, inters = split_network(net([[[0.2, 0.5], [0.8, 0.5]],
                                          [[0.5, 0.2], [0.5, 0.8]]]))
    m, ff = voronoi_constrained((0, 0, 1, 1), (branches, inters),
                                VoronoiParams(10, 10))
    for br, ids in zip(branches, ff):
        assert m.face_length[ids].sum() == pytest.approx(br.length, rel=1e-9)


def test_delta_validation():
    params = VoronoiParams(4, 4, delta=0.2)
    with pytest.raises(GeometryError, match="delta"):
        voronoi_constrained((0, 0, 1, 1), ([], []), params)


def test_close_fractures_rejected():
    branches, inters = split_network(net([[[0.1, 0.5], [0.9, 0.5]],
                                          [[0.1, 0.52], [0.9, 0.52]]]))
    with pytest.raises(GeometryError, match="closer"):
        voronoi_constrained((0, 0, 1, 1), (branches, inters),
                            VoronoiParams(8, 8))


def test_benchmark_scale_cell_count():
    from polydarcy.config import BUILTIN_NETWORKS
    b = BUILTIN_NETWORKS["benchmark3"]
    network = FractureNetwork(np.asarray(b["segments"]()).reshape(-1, 2, 2),
                              b["aperture"], b["k_tangential"], b["k_normal"])
    branches, inters = split_network(network)
    m, ff = voronoi_constrained((0, 0, 1, 1), (branches, inters),
                                VoronoiParams(36, 36))
    # order-of-magnitude check against the published grid size
    assert 1000 <= m.n_cells <= 2400
    for br, ids in zip(branches, ff):
        assert m.face_length[ids].sum() == pytest.approx(br.length, rel=1e-9)
