"""Cartesian background grids cut by fracture branches.

Each background rectangle crossed by fracture pieces is re-polygonized
with a small planar arrangement: nodes are the cell corners, the
edge/fracture crossing points and interior fracture endpoints; edges are
the subdivided rectangle boundary, the fracture pieces and, for cells
containing a fracture tip, two connectors from the tip to the corner
nodes of the side crossed by the fracture's prolongation (the three-way
tip split that keeps sub-cells free of coincident faces).  Faces are
read off by the usual angular half-edge walk.

Crossing points snap to existing nodes within a relative tolerance to
avoid micro-edges; remaining small cells are meant to be handled by
agglomeration afterwards.
"""

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, MeshError
from .fractures import FractureNetwork, split_network
from .mesh import mesh_from_cell_loops


@dataclass
class CutParams:
    nx: int = 16
    ny: int = 16
    snap_tol: float = 1e-6  # relative to the background cell size

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise GeometryError("background counts must be >= 1")
        if not 0.0 <= self.snap_tol < 0.1:
            raise GeometryError("snap tolerance must lie in [0, 0.1)")


class _NodeBank:
    """Node registry with tolerance-based deduplication."""

    def __init__(self, snap):
        self.snap = snap
        self.xy = []
        self.buckets = defaultdict(list)
        self.cell = max(snap, 1e-300) * 4

    def _key(self, x, y):
        return (math.floor(x / self.cell), math.floor(y / self.cell))

    def insert(self, x, y, snap=True):
        if snap and self.snap > 0:
            kx, ky = self._key(x, y)
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    for idx in self.buckets[(kx + dx, ky + dy)]:
                        px, py = self.xy[idx]
                        if math.hypot(px - x, py - y) <= self.snap:
                            return idx
        idx = len(self.xy)
        self.xy.append((x, y))
        self.buckets[self._key(x, y)].append(idx)
        return idx


def _extract_faces(xy, edges):
    """CCW node loops of a planar straight-line subdivision.

    ``edges`` are undirected node pairs; the outer (negative area) loop
    is dropped.
    """
    out = defaultdict(list)
    eset = set()
    for a, b in edges:
        if a == b:
            continue
        key = (min(a, b), max(a, b))
        if key in eset:
            continue
        eset.add(key)
        out[a].append(b)
        out[b].append(a)

    order = {}
    for n, nbrs in out.items():
        ang = [(math.atan2(xy[m][1] - xy[n][1], xy[m][0] - xy[n][0]), m)
               for m in nbrs]
        ang.sort()
        order[n] = [m for _, m in ang]

    visited = set()
    loops = []
    for a in list(out):
        for b in out[a]:
            if (a, b) in visited:
                continue
            loop = []
            ha, hb = a, b
            while (ha, hb) not in visited:
                visited.add((ha, hb))
                loop.append(ha)
                nbrs = order[hb]
                i = nbrs.index(ha)
                nxt = nbrs[(i - 1) % len(nbrs)]
                ha, hb = hb, nxt
                if len(loop) > len(eset) * 2 + 4:
                    raise MeshError("face walk failed to close")
            if (ha, hb) != (a, b):
                continue
            area2 = 0.0
            pts = [xy[n] for n in loop]
            for (x0, y0), (x1, y1) in zip(pts, pts[1:] + pts[:1]):
                area2 += x0 * y1 - x1 * y0
            if area2 > 0:
                loops.append(loop)
    return loops


def cut_cartesian(domain, network, params=None):
    """Fracture-conforming polygonal mesh from a cut Cartesian grid.

    Parameters
    ----------
    domain : (xmin, ymin, xmax, ymax)
    network : FractureNetwork, or a ready ``(branches, intersections)``
        pair from :func:`split_network`.
    params : CutParams

    Returns
    -------
    (mesh, frac_faces) with one ordered face-id array per branch.

    Raises
    ------
    GeometryError
        When a tip split collides with other fracture geometry inside
        one cell (refine the background grid) or when a fracture runs
        through a grid node with snapping disabled.
    """
    params = params or CutParams()
    xmin, ymin, xmax, ymax = domain
    nx, ny = params.nx, params.ny
    if isinstance(network, FractureNetwork):
        branches, intersections = split_network(network)
    else:
        branches, intersections = network
    xs = np.linspace(xmin, xmax, nx + 1)
    ys = np.linspace(ymin, ymax, ny + 1)
    hx = (xmax - xmin) / nx
    hy = (ymax - ymin) / ny
    hmin = min(hx, hy)
    snap = params.snap_tol * hmin
    tiny = 1e-12 * hmin

    for br in branches:
        for p in (br.p0, br.p1):
            if not (xmin - tiny <= p[0] <= xmax + tiny
                    and ymin - tiny <= p[1] <= ymax + tiny):
                raise GeometryError("fracture outside the domain")

    bank = _NodeBank(snap)
    corner = np.empty((ny + 1, nx + 1), dtype=np.int64)
    for j in range(ny + 1):
        for i in range(nx + 1):
            corner[j, i] = bank.insert(xs[i], ys[j], snap=False)
    n_grid_nodes = len(bank.xy)

    def on_grid_x(x):
        i = round((x - xmin) / hx)
        return 0 <= i <= nx and abs(x - xs[int(min(max(i, 0), nx))]) <= tiny

    def on_grid_y(y):
        j = round((y - ymin) / hy)
        return 0 <= j <= ny and abs(y - ys[int(min(max(j, 0), ny))]) <= tiny

    def locate(x, y):
        i = int(np.clip(math.floor((x - xmin) / hx), 0, nx - 1))
        j = int(np.clip(math.floor((y - ymin) / hy), 0, ny - 1))
        return i, j

    def snap_to_grid(x, y):
        """Clamp coordinates onto grid lines within the snap distance.

        Keeps every fracture node unambiguously inside or on the
        boundary of a background cell.
        """
        if snap <= 0:
            return x, y
        i = round((x - xmin) / hx)
        if 0 <= i <= nx and abs(x - xs[int(i)]) <= snap:
            x = xs[int(i)]
        j = round((y - ymin) / hy)
        if 0 <= j <= ny and abs(y - ys[int(j)]) <= snap:
            y = ys[int(j)]
        return x, y

    # per-cell collections
    bnd_pts = defaultdict(set)     # cell -> node ids on its rectangle edges
    pieces = defaultdict(list)     # cell -> (a, b) fracture pieces inside
    chains = []                    # per branch: ordered piece node pairs
    tips = {}                      # node -> unit direction of prolongation

    def register_boundary(node, x, y):
        """Attach a node sitting on a grid line to its adjacent cells."""
        gx = on_grid_x(x)
        gy = on_grid_y(y)
        if gx:
            i = int(round((x - xmin) / hx))
            j0 = int(np.clip(math.floor((y - ymin) / hy), 0, ny - 1))
            for ii in (i - 1, i):
                if 0 <= ii < nx:
                    bnd_pts[(ii, j0)].add(node)
        if gy:
            j = int(round((y - ymin) / hy))
            i0 = int(np.clip(math.floor((x - xmin) / hx), 0, nx - 1))
            for jj in (j - 1, j):
                if 0 <= i0 < nx and 0 <= jj < ny:
                    bnd_pts[(i0, jj)].add(node)
        return gx or gy

    iota_nodes = set()
    for ip in intersections:
        n = bank.insert(*snap_to_grid(*ip.location))
        iota_nodes.add(n)

    for bi, br in enumerate(branches):
        p0, p1 = br.p0, br.p1
        d = p1 - p0
        L = br.length
        ts = [0.0, 1.0]
        for x in xs:
            if min(p0[0], p1[0]) - tiny <= x <= max(p0[0], p1[0]) + tiny \
                    and abs(d[0]) > tiny:
                ts.append((x - p0[0]) / d[0])
        for y in ys:
            if min(p0[1], p1[1]) - tiny <= y <= max(p0[1], p1[1]) + tiny \
                    and abs(d[1]) > tiny:
                ts.append((y - p0[1]) / d[1])
        ts = np.clip(sorted(ts), 0.0, 1.0)

        chain = []
        for t in ts:
            x, y = p0 + t * d
            if params.snap_tol == 0 and (on_grid_x(x) and on_grid_y(y)) \
                    and 0.0 < t < 1.0:
                raise GeometryError(
                    "fracture passes through a grid node and snapping "
                    "is disabled")
            n = bank.insert(*snap_to_grid(x, y))
            if not chain or chain[-1][0] != n:
                chain.append((n, t))

        piece_list = []
        for (na, ta), (nb, tb) in zip(chain[:-1], chain[1:]):
            ax, ay = bank.xy[na]
            bx, by = bank.xy[nb]
            mx, my = 0.5 * (ax + bx), 0.5 * (ay + by)
            piece_list.append((na, nb))
            if (on_grid_x(ax) and on_grid_x(bx)
                    and abs(ax - bx) <= tiny) or \
               (on_grid_y(ay) and on_grid_y(by) and abs(ay - by) <= tiny):
                # piece lies on a grid line: subdivides two cell boundaries
                register_boundary(na, ax, ay)
                register_boundary(nb, bx, by)
                continue
            cell = locate(mx, my)
            pieces[cell].append((na, nb))
            for n, (x, y) in ((na, (ax, ay)), (nb, (bx, by))):
                if not register_boundary(n, x, y):
                    pass  # interior node (tip or intersection)
        chains.append(piece_list)

        # tips: branch endpoints not shared with an intersection and
        # strictly inside a cell
        for t_end, node_t in ((0.0, chain[0][0]), (1.0, chain[-1][0])):
            x, y = bank.xy[node_t]
            if node_t in iota_nodes or on_grid_x(x) or on_grid_y(y):
                continue
            direction = d / L if t_end == 1.0 else -d / L
            tips[node_t] = direction

    # tip connectors toward the side crossed by the prolongation
    connectors = defaultdict(list)
    for node_t, direction in tips.items():
        x, y = bank.xy[node_t]
        ci, cj = locate(x, y)
        x0, x1 = xs[ci], xs[ci + 1]
        y0, y1 = ys[cj], ys[cj + 1]
        best = None
        for side, t_exit in (
                ("xmax", (x1 - x) / direction[0] if direction[0] > tiny else np.inf),
                ("xmin", (x0 - x) / direction[0] if direction[0] < -tiny else np.inf),
                ("ymax", (y1 - y) / direction[1] if direction[1] > tiny else np.inf),
                ("ymin", (y0 - y) / direction[1] if direction[1] < -tiny else np.inf)):
            if t_exit < (best[1] if best else np.inf):
                best = (side, t_exit)
        side = best[0]
        if side == "xmax":
            corners = (corner[cj, ci + 1], corner[cj + 1, ci + 1])
        elif side == "xmin":
            corners = (corner[cj, ci], corner[cj + 1, ci])
        elif side == "ymax":
            corners = (corner[cj + 1, ci], corner[cj + 1, ci + 1])
        else:
            corners = (corner[cj, ci], corner[cj, ci + 1])
        for cn in corners:
            connectors[(ci, cj)].append((node_t, int(cn)))

    # assemble per-cell loops
    xy = bank.xy
    loops = []
    for cj in range(ny):
        for ci in range(nx):
            cell = (ci, cj)
            cpts = [corner[cj, ci], corner[cj, ci + 1],
                    corner[cj + 1, ci + 1], corner[cj + 1, ci]]
            extra = bnd_pts.get(cell, set()) - set(cpts)
            if not extra and cell not in pieces and cell not in connectors:
                loops.append(cpts)
                continue
            x0, x1 = xs[ci], xs[ci + 1]
            y0, y1 = ys[cj], ys[cj + 1]
            wx, wy = x1 - x0, y1 - y0

            def perim(n):
                x, y = xy[n]
                if abs(y - y0) <= tiny and x <= x1 + tiny:
                    return x - x0
                if abs(x - x1) <= tiny:
                    return wx + (y - y0)
                if abs(y - y1) <= tiny:
                    return wx + wy + (x1 - x)
                return 2 * wx + wy + (y1 - y)

            ring = sorted(set(cpts) | extra, key=perim)
            edges = [(ring[i], ring[(i + 1) % len(ring)])
                     for i in range(len(ring))]
            cell_pieces = pieces.get(cell, [])
            edges += cell_pieces
            edges += connectors.get(cell, [])
            if cell_pieces:
                _check_no_crossings(xy, cell_pieces,
                                    connectors.get(cell, []), ci, cj, tiny)
            sub = _extract_faces(xy, edges)
            area_sum = 0.0
            for lp in sub:
                pts = [xy[n] for n in lp]
                a2 = sum(px * qy - qx * py for (px, py), (qx, qy)
                         in zip(pts, pts[1:] + pts[:1]))
                area_sum += 0.5 * a2
            if abs(area_sum - wx * wy) > 1e-9 * wx * wy:
                raise MeshError(
                    f"cut of cell ({ci},{cj}) does not tile it "
                    f"({area_sum:.3e} vs {wx * wy:.3e})")
            loops.extend(sub)

    mesh = mesh_from_cell_loops(np.asarray(xy, float), loops)

    # the fracture face chains come from the construction bookkeeping,
    # which stays exact under snapping
    pair_to_face = {}
    for f in range(mesh.n_faces):
        a, b = mesh.face_nodes[f]
        pair_to_face[(min(a, b), max(a, b))] = f
    frac_faces = []
    for piece_list in chains:
        ids = []
        for a, b in piece_list:
            face = pair_to_face.get((min(a, b), max(a, b)))
            if face is None:
                raise MeshError("fracture piece lost during polygonization")
            ids.append(face)
        frac_faces.append(np.asarray(ids, dtype=np.int64))
    return mesh, frac_faces


def _check_no_crossings(xy, cell_pieces, cell_connectors, ci, cj, tiny):
    """Reject configurations where tip connectors cross other edges."""
    def crosses(e1, e2):
        shared = set(e1) & set(e2)
        if shared:
            return False
        p0, p1 = np.asarray(xy[e1[0]]), np.asarray(xy[e1[1]])
        q0, q1 = np.asarray(xy[e2[0]]), np.asarray(xy[e2[1]])
        d1, d2 = p1 - p0, q0 - q1
        denom = d1[0] * d2[1] - d1[1] * d2[0]
        if abs(denom) <= tiny:
            return False
        r = q0 - p0
        s = (r[0] * d2[1] - r[1] * d2[0]) / denom
        t = (d1[0] * r[1] - d1[1] * r[0]) / denom
        return 1e-12 < s < 1 - 1e-12 and 1e-12 < t < 1 - 1e-12

    interior = list(cell_pieces) + list(cell_connectors)
    for i, e1 in enumerate(cell_connectors):
        for e2 in interior:
            if e1 is e2:
                continue
            if crosses(e1, e2):
                raise GeometryError(
                    f"tip split in cell ({ci},{cj}) collides with other "
                    "fracture geometry; use a finer background grid")


