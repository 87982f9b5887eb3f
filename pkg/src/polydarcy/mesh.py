"""Polygonal mesh data model, construction and quality statistics.

The mesh is stored in flat numpy arrays.  Cells reference faces through a
CSR-like layout together with orientation signs: ``sign = +1`` means the
stored face normal points out of the cell.  Faces are straight segments
between two nodes; a cell may list collinear consecutive faces (hanging
nodes) and, after agglomeration, its boundary may consist of several
closed loops (holes).  All geometric cell quantities are therefore
computed from face integrals rather than from a single node loop.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import MeshError

# boundary condition tag per face
INTERIOR = 0
ESSENTIAL_U = 1  # prescribed normal flux
NATURAL_P = 2  # prescribed pressure

# endpoint tags for 1d (fracture) grids
TIP_NOFLOW = 0
END_ESSENTIAL_U = 1
END_NATURAL_P = 2


class PolyMesh:
    """2D polygonal mesh with signed cell-face incidence.

    Instances are immutable by convention: construct once via
    :func:`build_poly_mesh` (or a generator) and only read afterwards.
    """

    def __init__(self, node_xy, face_nodes, face_normal, face_length,
                 cell_face_ptr, cell_face, cell_sign, boundary_tag,
                 face_cells, cell_area, cell_centroid, cell_diameter):
        self.node_xy = node_xy
        self.face_nodes = face_nodes
        self.face_normal = face_normal
        self.face_length = face_length
        self.cell_face_ptr = cell_face_ptr
        self.cell_face = cell_face
        self.cell_sign = cell_sign
        self.boundary_tag = boundary_tag
        self.face_cells = face_cells
        self.cell_area = cell_area
        self.cell_centroid = cell_centroid
        self.cell_diameter = cell_diameter

    @property
    def n_nodes(self):
        return self.node_xy.shape[0]

    @property
    def n_faces(self):
        return self.face_nodes.shape[0]

    @property
    def n_cells(self):
        return self.cell_face_ptr.shape[0] - 1

    def cell_faces(self, c):
        """Face ids and orientation signs of cell ``c``."""
        sl = slice(self.cell_face_ptr[c], self.cell_face_ptr[c + 1])
        return self.cell_face[sl], self.cell_sign[sl]

    def cell_nodes(self, c):
        """Ids of the nodes touched by the faces of cell ``c``."""
        faces, _ = self.cell_faces(c)
        return np.unique(self.face_nodes[faces])

    def face_midpoints(self):
        return 0.5 * (self.node_xy[self.face_nodes[:, 0]]
                      + self.node_xy[self.face_nodes[:, 1]])

    def interior_faces(self):
        return np.where(self.face_cells[:, 1] >= 0)[0]

    def boundary_faces(self):
        return np.where(self.face_cells[:, 1] < 0)[0]

    def total_area(self):
        return float(self.cell_area.sum())

    def copy_with_tags(self, boundary_tag):
        """Same mesh with a different boundary tagging."""
        return PolyMesh(self.node_xy, self.face_nodes, self.face_normal,
                        self.face_length, self.cell_face_ptr, self.cell_face,
                        self.cell_sign, np.asarray(boundary_tag, dtype=np.int8),
                        self.face_cells, self.cell_area, self.cell_centroid,
                        self.cell_diameter)


def _cell_geometry(node_xy, face_nodes, face_normal, face_length,
                   cell_face_ptr, cell_face, cell_sign):
    """Area, centroid and diameter of every cell from face integrals.

    area      = 1/2 sum_e sign * |e| * (m_e . n_e)
    integral of x_j over C = 1/3 * boundary integral of x_j (x . n),
    evaluated with Simpson's rule per face (quadratic integrand, exact).
    """
    n_cells = cell_face_ptr.shape[0] - 1
    a = node_xy[face_nodes[:, 0]]
    b = node_xy[face_nodes[:, 1]]
    m = 0.5 * (a + b)
    an = np.einsum("ij,ij->i", a, face_normal)
    mn = np.einsum("ij,ij->i", m, face_normal)
    bn = np.einsum("ij,ij->i", b, face_normal)
    area_part = 0.5 * face_length * mn
    mom_part = (face_length / 6.0)[:, None] * (
        a * an[:, None] + 4.0 * m * mn[:, None] + b * bn[:, None]) / 3.0

    area = np.zeros(n_cells)
    centroid = np.zeros((n_cells, 2))
    diameter = np.zeros(n_cells)
    for c in range(n_cells):
        sl = slice(cell_face_ptr[c], cell_face_ptr[c + 1])
        f = cell_face[sl]
        s = cell_sign[sl].astype(float)
        area[c] = np.dot(s, area_part[f])
        centroid[c] = s @ mom_part[f]
        pts = node_xy[np.unique(face_nodes[f])]
        # max pairwise distance
        d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
        diameter[c] = np.sqrt(d2.max())
    with np.errstate(divide="ignore", invalid="ignore"):
        centroid = np.where(area[:, None] != 0, centroid / area[:, None], 0.0)
    return area, centroid, diameter


def build_poly_mesh(node_xy, face_nodes, cells, boundary_tag=None):
    """Assemble and validate a :class:`PolyMesh`.

    Parameters
    ----------
    node_xy : (N, 2) array of node coordinates.
    face_nodes : (F, 2) int array; the stored node order fixes the face
        normal as the right-hand perpendicular of ``b - a``.
    cells : sequence of ``(face_ids, signs)`` pairs, ``signs`` in {-1, +1}
        with +1 meaning the face normal points out of the cell.
    boundary_tag : optional (F,) int array; boundary faces default to
        ESSENTIAL_U (sealed), interior faces to INTERIOR.

    Raises
    ------
    MeshError
        On non-manifold faces, open cell boundaries, zero-area cells or
        violated orientation invariants.
    """
    node_xy = np.asarray(node_xy, dtype=float)
    face_nodes = np.asarray(face_nodes, dtype=np.int64)
    if node_xy.size and not np.isfinite(node_xy).all():
        raise MeshError("non-finite node coordinates")
    if face_nodes.size:
        if face_nodes.min() < 0 or face_nodes.max() >= node_xy.shape[0]:
            raise MeshError("face references a node out of range")

    vec = node_xy[face_nodes[:, 1]] - node_xy[face_nodes[:, 0]]
    face_length = np.hypot(vec[:, 0], vec[:, 1])
    if np.any(face_length <= 0):
        raise MeshError("zero-length face")
    face_normal = np.column_stack([vec[:, 1], -vec[:, 0]]) / face_length[:, None]

    n_cells = len(cells)
    counts = np.fromiter((len(fc[0]) for fc in cells), dtype=np.int64,
                         count=n_cells)
    cell_face_ptr = np.zeros(n_cells + 1, dtype=np.int64)
    np.cumsum(counts, out=cell_face_ptr[1:])
    cell_face = np.empty(cell_face_ptr[-1], dtype=np.int64)
    cell_sign = np.empty(cell_face_ptr[-1], dtype=np.int8)
    for c, (f_ids, signs) in enumerate(cells):
        sl = slice(cell_face_ptr[c], cell_face_ptr[c + 1])
        cell_face[sl] = f_ids
        cell_sign[sl] = signs

    # face -> (plus cell, minus cell) adjacency
    face_cells = np.full((face_nodes.shape[0], 2), -1, dtype=np.int64)
    for c in range(n_cells):
        f_ids, signs = cell_face[cell_face_ptr[c]:cell_face_ptr[c + 1]], \
            cell_sign[cell_face_ptr[c]:cell_face_ptr[c + 1]]
        for f, s in zip(f_ids, signs):
            col = 0 if s > 0 else 1
            if face_cells[f, col] >= 0:
                raise MeshError(
                    f"non-manifold face {f}: more than one cell on the same side")
            face_cells[f, col] = c
    orphan = (face_cells[:, 0] < 0) & (face_cells[:, 1] < 0)
    if np.any(orphan):
        raise MeshError(f"{orphan.sum()} faces belong to no cell")
    # a boundary face must be oriented outward (sign +1 side present)
    if np.any((face_cells[:, 0] < 0) & (face_cells[:, 1] >= 0)):
        bad = np.where((face_cells[:, 0] < 0) & (face_cells[:, 1] >= 0))[0]
        raise MeshError(f"boundary face {bad[0]} oriented inward")

    # per-cell closure: each node used exactly twice, sum sign*|e|*n = 0
    for c in range(n_cells):
        f_ids = cell_face[cell_face_ptr[c]:cell_face_ptr[c + 1]]
        signs = cell_sign[cell_face_ptr[c]:cell_face_ptr[c + 1]]
        if len(f_ids) < 3:
            raise MeshError(f"open cell boundary: cell {c} has {len(f_ids)} faces")
        # agglomerates may touch themselves at a node (degree 4), but any
        # odd-degree node leaves the boundary open
        nodes, cnt = np.unique(face_nodes[f_ids], return_counts=True)
        if np.any(cnt % 2 != 0):
            raise MeshError(f"open cell boundary: cell {c}")
        res = (signs[:, None] * face_length[f_ids, None]
               * face_normal[f_ids]).sum(0)
        perim = face_length[f_ids].sum()
        if np.linalg.norm(res) > 1e-12 * perim:
            raise MeshError(f"cell {c} boundary does not close (residual "
                            f"{np.linalg.norm(res):.2e})")

    area, centroid, diameter = _cell_geometry(
        node_xy, face_nodes, face_normal, face_length,
        cell_face_ptr, cell_face, cell_sign)
    if np.any(area <= 0):
        c = int(np.argmin(area))
        raise MeshError(f"zero or negative area in cell {c} ({area[c]:.3e})")

    if boundary_tag is None:
        boundary_tag = np.where(face_cells[:, 1] < 0, ESSENTIAL_U,
                                INTERIOR).astype(np.int8)
    else:
        boundary_tag = np.asarray(boundary_tag, dtype=np.int8)
        if np.any((boundary_tag != INTERIOR) & (face_cells[:, 1] >= 0)):
            raise MeshError("interior face carries a boundary tag")

    return PolyMesh(node_xy, face_nodes, face_normal, face_length,
                    cell_face_ptr, cell_face, cell_sign, boundary_tag,
                    face_cells, area, centroid, diameter)


def mesh_from_cell_loops(node_xy, loops, boundary_tag=None):
    """Build a mesh from counter-clockwise polygon node loops.

    Shared faces are deduplicated on their node pair; orientation signs
    follow from the traversal direction.  Loops given clockwise are
    reversed.
    """
    node_xy = np.asarray(node_xy, dtype=float)
    face_index = {}
    face_nodes = []
    cells = []
    for loop in loops:
        loop = np.asarray(loop, dtype=np.int64)
        xy = node_xy[loop]
        area2 = np.sum(xy[:, 0] * np.roll(xy[:, 1], -1)
                       - np.roll(xy[:, 0], -1) * xy[:, 1])
        if area2 < 0:
            loop = loop[::-1]
        if len(set(int(n) for n in loop)) != len(loop):
            raise MeshError("cell loop visits a node twice")
        f_ids, signs = [], []
        for a, b in zip(loop, np.roll(loop, -1)):
            if a == b:
                raise MeshError("degenerate loop edge")
            key = (min(a, b), max(a, b))
            idx = face_index.get(key)
            if idx is None:
                idx = len(face_nodes)
                face_index[key] = idx
                face_nodes.append((a, b))
                signs.append(1)
            else:
                fa, fb = face_nodes[idx]
                signs.append(1 if (fa, fb) == (a, b) else -1)
            f_ids.append(idx)
        cells.append((np.array(f_ids), np.array(signs)))
    return build_poly_mesh(node_xy, np.array(face_nodes, dtype=np.int64),
                           cells, boundary_tag)


def cartesian_mesh(nx, ny, domain=(0.0, 0.0, 1.0, 1.0)):
    """Uniform rectangular mesh of ``nx * ny`` cells.

    ``domain`` is ``(xmin, ymin, xmax, ymax)``.  Boundary faces are tagged
    ESSENTIAL_U (sealed); retag before assembling with pressure data.
    """
    if nx < 1 or ny < 1:
        raise MeshError("cartesian_mesh needs nx, ny >= 1")
    xmin, ymin, xmax, ymax = domain
    if not (xmax > xmin and ymax > ymin):
        raise MeshError("degenerate domain rectangle")
    xs = np.linspace(xmin, xmax, nx + 1)
    ys = np.linspace(ymin, ymax, ny + 1)
    node_xy = np.column_stack([np.tile(xs, ny + 1),
                               np.repeat(ys, nx + 1)])

    def nid(i, j):
        return j * (nx + 1) + i

    loops = []
    for j in range(ny):
        for i in range(nx):
            loops.append([nid(i, j), nid(i + 1, j),
                          nid(i + 1, j + 1), nid(i, j + 1)])
    return mesh_from_cell_loops(node_xy, loops)


def boundary_faces_on_side(mesh, side, tol=1e-10):
    """Boundary faces whose midpoint lies on one side of the bounding box.

    ``side`` is one of ``xmin``, ``xmax``, ``ymin``, ``ymax``.
    """
    mid = mesh.face_midpoints()
    lo = mesh.node_xy.min(axis=0)
    hi = mesh.node_xy.max(axis=0)
    scale = max(hi[0] - lo[0], hi[1] - lo[1])
    targets = {"xmin": (0, lo[0]), "xmax": (0, hi[0]),
               "ymin": (1, lo[1]), "ymax": (1, hi[1])}
    if side not in targets:
        raise ValueError(f"unknown side {side!r}")
    axis, val = targets[side]
    bnd = mesh.boundary_faces()
    on = np.abs(mid[bnd, axis] - val) < tol * scale
    return bnd[on]


def faces_on_segment(mesh, p0, p1, tol=1e-9):
    """Faces whose two endpoints lie on the segment ``p0 -> p1``.

    Returned in order of increasing parameter along the segment.  Used to
    detect fracture-conforming face chains.
    """
    p0 = np.asarray(p0, float)
    p1 = np.asarray(p1, float)
    t = p1 - p0
    L = np.hypot(*t)
    if L == 0:
        raise ValueError("degenerate segment")
    t = t / L
    rel = mesh.node_xy - p0
    s = rel @ t
    off = np.abs(rel[:, 0] * t[1] - rel[:, 1] * t[0])
    on_node = (off <= tol * L) & (s >= -tol * L) & (s <= L * (1 + tol))
    fa, fb = mesh.face_nodes[:, 0], mesh.face_nodes[:, 1]
    on_face = on_node[fa] & on_node[fb]
    ids = np.where(on_face)[0]
    params = 0.5 * (s[fa[ids]] + s[fb[ids]]) / L
    order = np.argsort(params)
    return ids[order]


def aspect_ratio(area, diameter, n_faces=4):
    """Scaled diameter of a cell.

    The maximum point-to-point distance is divided by the diameter of the
    reference shape of equal area: a square in general, an equilateral
    triangle for three-sided cells.  Squares and equilateral triangles
    therefore score exactly 1.
    """
    if area <= 0 or diameter <= 0:
        raise ValueError("aspect_ratio needs positive area and diameter")
    if n_faces == 3:
        ref = np.sqrt(4.0 * area / np.sqrt(3.0))
    else:
        ref = np.sqrt(2.0 * area)
    return float(diameter / ref)


def cell_aspect_ratios(mesh):
    counts = np.diff(mesh.cell_face_ptr)
    return np.array([aspect_ratio(a, d, n) for a, d, n in
                     zip(mesh.cell_area, mesh.cell_diameter, counts)])


@dataclass
class QualityReport:
    """Per-cell shape statistics with min/avg/max aggregates."""
    aspect: np.ndarray
    area: np.ndarray
    n_faces: np.ndarray
    summary: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.summary:
            for name, arr in (("aspect", self.aspect), ("area", self.area),
                              ("n_faces", self.n_faces)):
                self.summary[name] = (float(arr.min()), float(arr.mean()),
                                      float(arr.max()))


def quality_stats(mesh):
    """Aspect ratio, area and face-count statistics of a mesh."""
    if mesh.n_cells == 0:
        raise MeshError("empty mesh")
    counts = np.diff(mesh.cell_face_ptr)
    return QualityReport(aspect=cell_aspect_ratios(mesh),
                         area=mesh.cell_area.copy(),
                         n_faces=counts.astype(np.int64))


def cell_loops(mesh, c):
    """Ordered boundary loops of a cell.

    Faces are traversed with the interior on the left, so the exterior
    loop comes out counter-clockwise and hole loops clockwise.  Returns a
    list of node-id lists, exterior first.
    """
    faces, signs = mesh.cell_faces(c)
    outgoing = {}
    for f, s in zip(faces, signs):
        a, b = mesh.face_nodes[f]
        if s < 0:
            a, b = b, a
        outgoing.setdefault(int(a), []).append(int(b))
    for a in outgoing:
        outgoing[a].sort(key=lambda b: np.arctan2(
            mesh.node_xy[b, 1] - mesh.node_xy[a, 1],
            mesh.node_xy[b, 0] - mesh.node_xy[a, 0]))
    used = set()
    loops = []
    for a0 in sorted(outgoing):
        for b0 in outgoing[a0]:
            if (a0, b0) in used:
                continue
            loop = []
            a, b = a0, b0
            while (a, b) not in used:
                used.add((a, b))
                loop.append(a)
                # continue with the most clockwise outgoing edge relative
                # to the reversed incoming direction (keeps interior left)
                cands = [t for t in outgoing[b] if (b, t) not in used]
                if not cands:
                    break
                back = np.arctan2(mesh.node_xy[a, 1] - mesh.node_xy[b, 1],
                                  mesh.node_xy[a, 0] - mesh.node_xy[b, 0])
                angs = [(np.arctan2(mesh.node_xy[t, 1] - mesh.node_xy[b, 1],
                                    mesh.node_xy[t, 0] - mesh.node_xy[b, 0])
                         - back) % (2 * np.pi) for t in cands]
                a, b = b, cands[int(np.argmax(angs))]
            loops.append(loop)

    def signed_area(loop):
        xy = mesh.node_xy[loop]
        return 0.5 * np.sum(xy[:, 0] * np.roll(xy[:, 1], -1)
                            - np.roll(xy[:, 0], -1) * xy[:, 1])

    loops.sort(key=signed_area, reverse=True)
    return loops


class SegmentMesh:
    """1D grid on a straight fracture branch.

    Nodes are stored by arclength; cell ``i`` spans nodes ``i, i+1``.
    Velocity degrees of freedom sit on the nodes and are oriented along
    the branch tangent.
    """

    def __init__(self, node_s, node_xy, tangent, end_tags):
        node_s = np.asarray(node_s, float)
        if np.any(np.diff(node_s) <= 0):
            raise MeshError("segment nodes must be strictly increasing")
        self.node_s = node_s
        self.node_xy = np.asarray(node_xy, float)
        self.tangent = np.asarray(tangent, float)
        self.end_tags = list(end_tags)

    @property
    def n_cells(self):
        return self.node_s.shape[0] - 1

    @property
    def n_nodes(self):
        return self.node_s.shape[0]

    @property
    def lengths(self):
        return np.diff(self.node_s)

    @property
    def length(self):
        return float(self.node_s[-1] - self.node_s[0])
