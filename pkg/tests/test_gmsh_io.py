import numpy as np
import pytest

from conftest import fixture_path
from polydarcy.errors import ParseError
from polydarcy.gmsh_io import import_gmsh


def test_v22_triangulated_square():
    mesh, constraints = import_gmsh(fixture_path("square_tri8.msh"))
    assert mesh.n_cells == 8
    assert mesh.total_area() == pytest.approx(1.0, rel=1e-12)
    assert constraints == {}


def test_v22_fracture_group():
    mesh, constraints = import_gmsh(fixture_path("square_frac.msh"))
    assert "FRACTURE_1" in constraints
    ids = constraints["FRACTURE_1"]
    assert len(ids) == 2
    mids = mesh.face_midpoints()[ids]
    assert np.allclose(mids[:, 1], 0.5)
    # the whole branch is recoverable from the tagged faces
    assert mesh.face_length[ids].sum() == pytest.approx(1.0)


def test_v41_minimal():
    mesh, constraints = import_gmsh(fixture_path("square_tri_v41.msh"))
    assert mesh.n_cells == 2
    assert list(constraints) == ["FRACTURE_1"]


def _write(tmp_path, text):
    p = tmp_path / "m.msh"
    p.write_text(text)
    return str(p)


def test_truncated_section(tmp_path):
    text = open(fixture_path("square_tri8.msh")).read()
    bad = _write(tmp_path, text.replace("$EndElements", ""))
    with pytest.raises(ParseError, match="Elements"):
        import_gmsh(bad)


def test_unsupported_element_type(tmp_path):
    text = open(fixture_path("square_tri8.msh")).read()
    bad = _write(tmp_path, text.replace("1 2 2 1 1 1 2 5", "1 4 2 1 1 1 2 5"))
    with pytest.raises(ParseError, match="element type"):
        import_gmsh(bad)


def test_unsupported_version(tmp_path):
    bad = _write(tmp_path, "$MeshFormat\n3.0 0 8\n$EndMeshFormat\n")
    with pytest.raises(ParseError, match="version"):
        import_gmsh(bad)


def test_binary_rejected(tmp_path):
    bad = _write(tmp_path, "$MeshFormat\n2.2 1 8\n$EndMeshFormat\n")
    with pytest.raises(ParseError, match="binary"):
        import_gmsh(bad)


def test_patch_on_imported_mesh():
    from polydarcy.assembly import (assemble_bulk, dirichlet_everywhere,
                                    split_solution)
    from polydarcy.linalg import solve_direct
    mesh, _ = import_gmsh(fixture_path("square_tri8.msh"))
    p_fn = lambda x, y: 1.0 + 2.0 * x - 0.5 * y
    mt, bc = dirichlet_everywhere(mesh, p_fn)
    system = assemble_bulk(mt, 1.0, bc)
    sol = split_solution(system, solve_direct(system))
    exact = np.array([p_fn(x, y) for x, y in mt.cell_centroid])
    assert np.abs(sol.p_cell - exact).max() < 1e-11
