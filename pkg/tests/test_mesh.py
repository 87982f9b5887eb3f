import numpy as np
import pytest

from polydarcy.errors import MeshError
from polydarcy.mesh import (aspect_ratio, boundary_faces_on_side,
                            build_poly_mesh, cartesian_mesh,
                            cell_aspect_ratios, cell_loops,
                            faces_on_segment, mesh_from_cell_loops,
                            quality_stats)


def test_unit_square_single_cell(unit_square_mesh):
    m = unit_square_mesh
    assert m.n_cells == 1
    assert m.cell_area[0] == pytest.approx(1.0)
    assert m.cell_diameter[0] == pytest.approx(np.sqrt(2.0))
    assert np.allclose(m.cell_centroid[0], [0.5, 0.5])


def test_cartesian_2x2_counts():
    m = cartesian_mesh(2, 2)
    assert m.n_cells == 4
    assert m.n_faces == 12
    assert len(m.interior_faces()) == 4
    assert len(m.boundary_faces()) == 8


def test_open_cell_boundary_rejected():
    node_xy = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
    faces = np.array([[0, 1], [1, 2]])
    with pytest.raises(MeshError, match="open cell boundary"):
        build_poly_mesh(node_xy, faces,
                        [(np.array([0, 1]), np.array([1, 1]))])


def test_nonmanifold_face_rejected():
    m = cartesian_mesh(2, 1)
    cells = [m.cell_faces(c) for c in range(2)]
    # duplicate cell 0 so its faces appear twice on the same side
    with pytest.raises(MeshError, match="non-manifold"):
        build_poly_mesh(m.node_xy, m.face_nodes, cells + [cells[0]])


def test_zero_area_cell_rejected():
    node_xy = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    with pytest.raises(MeshError):
        mesh_from_cell_loops(node_xy, [[0, 1, 2]])


def test_cartesian_spe10_resolution():
    m = cartesian_mesh(60, 220, (0, 0, 60, 220))
    assert m.n_cells == 13200
    assert np.allclose(m.cell_area, 1.0)
    assert np.allclose(cell_aspect_ratios(m), 1.0)


def test_cartesian_rejects_degenerate():
    with pytest.raises(MeshError):
        cartesian_mesh(0, 3)
    with pytest.raises(MeshError):
        cartesian_mesh(2, 2, (0, 0, 0, 1))


def test_cell_closure_invariant():
    m = cartesian_mesh(3, 5, (0, 0, 2, 1))
    for c in range(m.n_cells):
        f, s = m.cell_faces(c)
        res = (s[:, None] * m.face_length[f, None] * m.face_normal[f]).sum(0)
        assert np.linalg.norm(res) <= 1e-12 * m.face_length[f].sum()


def test_interior_faces_have_opposite_signs():
    m = cartesian_mesh(4, 3)
    sign_of = {}
    for c in range(m.n_cells):
        f, s = m.cell_faces(c)
        for fi, si in zip(f, s):
            sign_of.setdefault(fi, []).append(si)
    for f in m.interior_faces():
        assert sorted(sign_of[f]) == [-1, 1]


def test_cartesian_area_sum():
    dom = (0.3, -1.0, 2.7, 0.5)
    m = cartesian_mesh(7, 5, dom)
    exact = (dom[2] - dom[0]) * (dom[3] - dom[1])
    assert m.total_area() == pytest.approx(exact, rel=1e-12)


def test_aspect_ratio_anchors():
    assert aspect_ratio(1.0, np.sqrt(2.0), 4) == pytest.approx(1.0)
    a = 0.73
    area_eq = np.sqrt(3) / 4 * a * a
    assert aspect_ratio(area_eq, a, 3) == pytest.approx(1.0)
    # 2 x 1 rectangle: diameter sqrt(5), reference diameter sqrt(2 * 2)
    assert aspect_ratio(2.0, np.sqrt(5.0), 4) == pytest.approx(
        np.sqrt(5.0) / 2.0)


def test_aspect_ratio_rigid_motion_and_scaling_invariance():
    rng = np.random.default_rng(7)
    xy = np.array([[0, 0], [2, 0], [2.3, 1.1], [0.4, 1.6]], dtype=float)

    def ratio(pts):
        m = mesh_from_cell_loops(pts, [[0, 1, 2, 3]])
        return cell_aspect_ratios(m)[0]

    base = ratio(xy)
    for _ in range(5):
        th = rng.uniform(0, 2 * np.pi)
        rot = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        scale = rng.uniform(0.1, 10.0)
        moved = scale * xy @ rot.T + rng.normal(0, 3.0, 2)
        assert ratio(moved) == pytest.approx(base, rel=1e-12)


def test_quality_stats_cartesian():
    qs = quality_stats(cartesian_mesh(2, 2))
    assert qs.summary["n_faces"] == (4.0, 4.0, 4.0)
    assert qs.summary["aspect"] == pytest.approx((1.0, 1.0, 1.0))


def test_quality_stats_triangulation():
    node_xy = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    m = mesh_from_cell_loops(node_xy, [[0, 1, 2], [0, 2, 3]])
    qs = quality_stats(m)
    assert qs.summary["n_faces"] == (3.0, 3.0, 3.0)


def test_quality_stats_single_cell(unit_square_mesh):
    qs = quality_stats(unit_square_mesh)
    for key in ("aspect", "area", "n_faces"):
        mn, avg, mx = qs.summary[key]
        assert mn == avg == mx


def test_quality_stats_empty():
    empty = build_poly_mesh(np.zeros((0, 2)), np.zeros((0, 2), dtype=int), [])
    with pytest.raises(MeshError, match="empty"):
        quality_stats(empty)


def test_boundary_faces_on_side():
    m = cartesian_mesh(3, 2)
    assert len(boundary_faces_on_side(m, "xmin")) == 2
    assert len(boundary_faces_on_side(m, "ymax")) == 3
    with pytest.raises(ValueError):
        boundary_faces_on_side(m, "north")


def test_faces_on_segment_orders_chain():
    m = cartesian_mesh(4, 2)
    ids = faces_on_segment(m, (0.0, 0.5), (1.0, 0.5))
    assert len(ids) == 4
    mids = m.face_midpoints()[ids]
    assert np.all(np.diff(mids[:, 0]) > 0)


def test_cell_loops_simple(unit_square_mesh):
    loops = cell_loops(unit_square_mesh, 0)
    assert len(loops) == 1
    assert sorted(loops[0]) == [0, 1, 2, 3]
