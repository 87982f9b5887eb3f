import os

import numpy as np
import pytest

from polydarcy.mesh import cartesian_mesh, mesh_from_cell_loops

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def fixture_path(name):
    return os.path.join(FIXTURES, name)


@pytest.fixture
def unit_square_mesh():
    node_xy = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    return mesh_from_cell_loops(node_xy, [[0, 1, 2, 3]])


@pytest.fixture
def cart4():
    return cartesian_mesh(4, 4)


def random_convex_polygon(rng, n=None):
    """Simple star-shaped polygon nodes (CCW) with a random offset.

    Angular gaps stay below pi so the construction point lies inside,
    which guarantees a simple counter-clockwise polygon.
    """
    k = int(n or rng.integers(3, 9))
    w = rng.uniform(0.7, 1.3, k)
    th = 2 * np.pi * np.cumsum(w) / w.sum() + rng.uniform(0, 2 * np.pi)
    r = rng.uniform(0.4, 1.2, k)
    xy = np.column_stack([r * np.cos(th), r * np.sin(th)])
    return xy + rng.normal(0, 2.0, 2)


def random_spd_tensor(rng):
    m = rng.normal(0, 1, (2, 2))
    return m @ m.T + rng.uniform(0.3, 1.5) * np.eye(2)


def polygon_face_data(xy):
    """Outward lengths, normals, midpoints, centroid and area of a CCW
    polygon given by its nodes (independent reimplementation used as the
    oracle path in local-matrix tests)."""
    e = np.roll(xy, -1, axis=0) - xy
    L = np.hypot(e[:, 0], e[:, 1])
    n = np.column_stack([e[:, 1], -e[:, 0]]) / L[:, None]
    m = 0.5 * (xy + np.roll(xy, -1, axis=0))
    cross = xy[:, 0] * np.roll(xy[:, 1], -1) - np.roll(xy[:, 0], -1) * xy[:, 1]
    area = 0.5 * cross.sum()
    cen = ((xy + np.roll(xy, -1, axis=0)) * cross[:, None]).sum(0) / (6 * area)
    return L, n, m, cen, area
