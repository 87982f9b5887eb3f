import numpy as np
import pytest

from polydarcy.errors import ConformityError, GeometryError
from polydarcy.fractures import (FractureNetwork, build_mixed_mesh,
                                 split_network)
from polydarcy.mesh import cartesian_mesh


def net(segments, **kw):
    kw.setdefault("aperture", 1e-4)
    kw.setdefault("k_tangential", 1.0)
    kw.setdefault("k_normal", 1.0)
    return FractureNetwork(segments, **kw)


def test_network_validation():
    with pytest.raises(GeometryError):
        net([[[0, 0], [1, 1]]], aperture=0.0)
    with pytest.raises(GeometryError):
        net([[[0, 0], [0, 0]]])
    with pytest.raises(GeometryError):
        net([[[0, 0], [1, 1]]], k_normal=-1.0)


def test_x_crossing_splits():
    branches, inters = split_network(net([[[0, 0.5], [1, 0.5]],
                                          [[0.5, 0], [0.5, 1]]]))
    assert len(inters) == 1
    assert len(branches) == 4
    assert np.allclose(inters[0].location, [0.5, 0.5])
    assert len(inters[0].incident) == 4


def test_t_contact_splits_host_only():
    branches, inters = split_network(net([[[0, 0.5], [1, 0.5]],
                                          [[0.4, 0.5], [0.4, 1.0]]]))
    assert len(inters) == 1
    assert len(branches) == 3
    assert len(inters[0].incident) == 3


def test_endpoint_contact_is_l_shape():
    branches, inters = split_network(net([[[0, 0], [0.5, 0.5]],
                                          [[0.5, 0.5], [1.0, 0.2]]]))
    assert len(branches) == 2
    assert len(inters) == 1
    assert len(inters[0].incident) == 2


def test_disjoint_parallel_no_intersections():
    branches, inters = split_network(net([[[0, 0.25], [1, 0.25]],
                                          [[0, 0.75], [1, 0.75]]]))
    assert len(branches) == 2
    assert inters == []


def test_collinear_overlap_rejected():
    with pytest.raises(GeometryError, match="collinear"):
        split_network(net([[[0.0, 0.5], [0.6, 0.5]],
                           [[0.4, 0.5], [1.0, 0.5]]]))


def test_intersection_defaults_and_overrides():
    network = net([[[0, 0.5], [1, 0.5]], [[0.5, 0], [0.5, 1]]],
                  aperture=[1e-3, 1e-4], k_normal=[1.0, 1e-4])
    _, inters = split_network(network)
    assert inters[0].eps == pytest.approx(1e-4)
    assert inters[0].kappa == pytest.approx(2.0 / (1.0 + 1e4))
    _, inters = split_network(network, eps_override=3e-5,
                              kappa_override=7.0)
    assert inters[0].eps == 3e-5
    assert inters[0].kappa == 7.0


def test_split_is_input_order_independent():
    segs = [[[0, 0.5], [1, 0.5]], [[0.5, 0], [0.5, 1]],
            [[0.1, 0.1], [0.9, 0.2]]]
    b1, i1 = split_network(net(segs))
    # permuting fractures relabels but preserves the branch geometry set
    b2, i2 = split_network(net([segs[2], segs[0], segs[1]]))
    key = lambda br: tuple(np.round(np.sort(np.r_[br.p0, br.p1]), 12))
    assert sorted(map(key, b1)) == sorted(map(key, b2))
    assert len(i1) == len(i2)
    for a, b in zip(i1, i2):
        assert np.allclose(a.location, b.location)


def test_build_mixed_mesh_basic():
    m = cartesian_mesh(1, 2)
    branches, inters = split_network(net([[[0.0, 0.5], [1.0, 0.5]]]))
    mixed = build_mixed_mesh(m, branches, inters)
    assert mixed.n_frac_cells == 1
    mortars = list(mixed.mortar_cells())
    assert len(mortars) == 2
    sides = sorted(mc[2] for mc in mortars)
    assert sides == [-1, 1]
    # bijections: each mortar cell maps to one face and one fracture cell
    faces = {mc[3] for mc in mortars}
    assert len(faces) == 1


def test_mixed_mesh_segment_lengths_match_branch():
    m = cartesian_mesh(8, 8)
    branches, inters = split_network(net([[[0.125, 0.5], [0.875, 0.5]]]))
    mixed = build_mixed_mesh(m, branches, inters)
    sm = mixed.frac_meshes[0]
    assert sm.length == pytest.approx(branches[0].length, rel=1e-12)
    assert sm.lengths.sum() == pytest.approx(branches[0].length, rel=1e-10)


def test_mixed_mesh_mortar_bijection():
    m = cartesian_mesh(6, 6)
    branches, inters = split_network(net([[[0.0, 0.5], [1.0, 0.5]],
                                          [[0.5, 0.0], [0.5, 1.0]]]))
    mixed = build_mixed_mesh(m, branches, inters)
    seen_faces = {}
    for b, k, side, f, cell, sigma in mixed.mortar_cells():
        seen_faces.setdefault(f, []).append(side)
        assert sigma in (-1, 1)
    assert all(sorted(v) == [-1, 1] for v in seen_faces.values())
    total = sum(sm.n_cells for sm in mixed.frac_meshes)
    assert len(seen_faces) == total


def test_nonconforming_rejected():
    m = cartesian_mesh(4, 4)
    branches, inters = split_network(net([[[0.0, 0.37], [1.0, 0.37]]]))
    with pytest.raises(ConformityError):
        build_mixed_mesh(m, branches, inters)


def test_plus_side_follows_branch_normal():
    m = cartesian_mesh(1, 2)
    branches, _ = split_network(net([[[0.0, 0.5], [1.0, 0.5]]]))
    mixed = build_mixed_mesh(m, branches, [])
    # tangent +x, normal (t_y, -t_x) = (0, -1): plus cell lies above
    plus = int(mixed.plus_cells[0][0])
    minus = int(mixed.minus_cells[0][0])
    assert m.cell_centroid[plus][1] > m.cell_centroid[minus][1]
