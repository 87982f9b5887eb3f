"""Fracture-conforming Voronoi grids.

Seeds are placed at the centers of background cells not cut by any
fracture branch; every branch receives mirror seed pairs at a small
offset on both sides (a pair per station along the branch), which forces
a Voronoi face exactly on the fracture.  Tips and intersection ends get
the four-seed cluster at combined tangential/normal offsets whose common
distance to the endpoint pins a Voronoi vertex exactly there.  Straight
boundary faces come from mirroring the full seed set across the domain
sides and corners; the diagram is effectively clipped to the domain by
keeping the cells of the interior seeds.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import Voronoi, cKDTree

from .errors import GeometryError, MeshError
from .fractures import FractureNetwork, split_network
from .mesh import faces_on_segment, mesh_from_cell_loops


@dataclass
class VoronoiParams:
    nx: int = 16
    ny: int = 16
    delta: float = None    # seed offset across a fracture
    delta1: float = None   # tip offset, normal direction
    delta2: float = None   # tip offset, tangential direction
    merge_tol: float = 1e-7  # vertex merge tolerance, relative to cell size

    def resolve(self, hmin):
        d = self.delta if self.delta is not None else hmin / 6.0
        d1 = self.delta1 if self.delta1 is not None else hmin / 6.0
        d2 = self.delta2 if self.delta2 is not None else hmin / 4.0
        for name, v in (("delta", d), ("delta1", d1), ("delta2", d2)):
            if not 0 < v < 0.5 * hmin:
                raise GeometryError(
                    f"{name}={v:g} must lie in (0, half background cell)")
        return d, d1, d2


def _branch_distance(b1, b2):
    """Minimum distance between two segments."""
    def pt_seg(p, a, b):
        d = b - a
        L2 = d @ d
        t = 0.0 if L2 == 0 else np.clip((p - a) @ d / L2, 0.0, 1.0)
        return np.hypot(*(a + t * d - p))
    return min(pt_seg(b1.p0, b2.p0, b2.p1), pt_seg(b1.p1, b2.p0, b2.p1),
               pt_seg(b2.p0, b1.p0, b1.p1), pt_seg(b2.p1, b1.p0, b1.p1))


def voronoi_constrained(domain, network, params=None):
    """Fracture-conforming Voronoi mesh on a rectangular domain.

    Returns ``(mesh, frac_faces)`` like :func:`cut_cartesian`.  With an
    empty network and default offsets the result is exactly the uniform
    Cartesian grid of the background lattice.
    """
    params = params or VoronoiParams()
    xmin, ymin, xmax, ymax = domain
    nx, ny = params.nx, params.ny
    hx = (xmax - xmin) / nx
    hy = (ymax - ymin) / ny
    hmin = min(hx, hy)
    if isinstance(network, FractureNetwork):
        branches, intersections = split_network(network)
    else:
        branches, intersections = network
    delta, d1, d2 = params.resolve(hmin)

    for i, b1 in enumerate(branches):
        for b2 in branches[i + 1:]:
            ends1 = (b1.p0, b1.p1)
            ends2 = (b2.p0, b2.p1)
            shared = any(np.hypot(*(e1 - e2)) < 1e-12 * hmin
                         for e1 in ends1 for e2 in ends2)
            if shared:
                continue
            if _branch_distance(b1, b2) < 2 * delta:
                raise GeometryError(
                    "fractures closer than twice the seed offset; "
                    "reduce delta or simplify the geometry")

    # background centers of cells not cut by a fracture
    eps = 1e-12 * hmin
    cut = np.zeros((ny, nx), dtype=bool)
    for br in branches:
        steps = max(2, int(4 * br.length / hmin))
        for t in np.linspace(0.0, 1.0, steps + 1):
            x, y = br.p0 + t * (br.p1 - br.p0)
            i = (x - xmin) / hx
            j = (y - ymin) / hy
            # points on grid lines do not cut the open cells
            ii, jj = int(np.clip(math.floor(i), 0, nx - 1)), \
                int(np.clip(math.floor(j), 0, ny - 1))
            if abs(i - round(i)) * hx > eps and abs(j - round(j)) * hy > eps:
                cut[jj, ii] = True

    seeds = []
    cy, cxs = np.meshgrid(ys_c := ymin + hy * (np.arange(ny) + 0.5),
                          xs_c := xmin + hx * (np.arange(nx) + 0.5),
                          indexing="ij")
    for j in range(ny):
        for i in range(nx):
            if not cut[j, i]:
                seeds.append((xs_c[i], ys_c[j]))

    iota_ends = {(b, e) for ip in intersections for b, e, _ in ip.incident}

    def clearance(bi, point):
        """Distance from a point of branch ``bi`` to non-collinear branches."""
        ti = branches[bi].tangent
        best = np.inf
        for bj, other in enumerate(branches):
            if bj == bi:
                continue
            cross = abs(ti[0] * other.tangent[1] - ti[1] * other.tangent[0])
            if cross < 1e-9:
                continue  # collinear neighbours keep the mirror symmetry
            d = other.p1 - other.p0
            L2 = d @ d
            s = np.clip((point - other.p0) @ d / L2, 0.0, 1.0)
            best = min(best, float(np.hypot(*(other.p0 + s * d - point))))
        return best

    # common cluster radius and angular widths per intersection: all
    # incident seeds sit at the same distance from the point (pinning a
    # Voronoi vertex there) and stay on their own side of every other
    # incident branch line
    radius_default = math.hypot(d1, d2)
    phi_default = math.atan2(d1, d2)
    iota_radius = {}
    iota_phi = {}
    for k, ip in enumerate(intersections):
        r = radius_default
        for bz, end, _ in ip.incident:
            br = branches[bz]
            r = min(r, 0.45 * br.length)
        iota_radius[k] = r
        for bz, end, _ in ip.incident:
            ti = branches[bz].tangent
            theta = math.pi
            for bo, _, _ in ip.incident:
                if bo == bz:
                    continue
                to = branches[bo].tangent
                cross = abs(ti[0] * to[1] - ti[1] * to[0])
                dot = abs(ti[0] * to[0] + ti[1] * to[1])
                ang = math.atan2(cross, dot)
                if ang > 1e-9:
                    theta = min(theta, ang)
            iota_phi[(k, bz)] = min(phi_default, 0.35 * theta)
    iota_of_end = {(b, e): k for k, ip in enumerate(intersections)
                   for b, e, _ in ip.incident}

    for bi, br in enumerate(branches):
        t = br.tangent
        n = np.array([t[1], -t[0]])
        L = br.length
        lo = 0.0
        hi = L
        graded = []
        for end, pt, tin in ((0, br.p0, t), (1, br.p1, -t)):
            on_bnd = (abs(pt[0] - xmin) < eps or abs(pt[0] - xmax) < eps
                      or abs(pt[1] - ymin) < eps or abs(pt[1] - ymax) < eps)
            if on_bnd:
                continue
            key = iota_of_end.get((bi, end))
            if key is None:
                # free tip: full four-seed cluster, shrunk to stay clear
                # of foreign fracture lines
                safe = clearance(bi, pt)
                off_t = min(d2, 0.3 * L, 0.3 * safe)
                off_n = min(d1, 0.3 * safe)
                for st in (+1, -1):
                    for sn in (+1, -1):
                        seeds.append(tuple(pt + st * off_t * tin
                                           + sn * off_n * n))
            else:
                # intersection end: one pair on the own side, narrowed to
                # the common radius and safe angle
                r = iota_radius[key]
                phi = iota_phi[(key, bi)]
                off_t = r * math.cos(phi)
                off_n = r * math.sin(phi)
                for sn in (+1, -1):
                    seeds.append(tuple(pt + off_t * tin + sn * off_n * n))
                # graded stations bridge from the cluster scale to the
                # regular spacing, offsets limited by the clearance
                s = 2.2 * off_t
                while s < min(0.35 * L, 1.5 * hmin):
                    graded.append(s if end == 0 else L - s)
                    s *= 1.6
            if end == 0:
                lo = max(lo, off_t)
            else:
                hi = min(hi, L - off_t)
        span = hi - lo
        n_st = max(1, int(math.ceil(span / (0.75 * hmin))))
        stations = [lo + (k + 0.5) * span / n_st for k in range(n_st)]
        for s in stations + graded:
            m = br.p0 + s * t
            off = min(delta, 0.3 * clearance(bi, m))
            if off < 1e-12:
                continue
            seeds.append(tuple(m + off * n))
            seeds.append(tuple(m - off * n))

    seeds = np.asarray(seeds, float)
    n_int = seeds.shape[0]
    if n_int == 0:
        raise GeometryError("no seeds generated")
    tree = cKDTree(seeds)
    pairs = tree.query_pairs(1e-12 * max(xmax - xmin, ymax - ymin))
    if pairs:
        raise GeometryError(f"seed collision: {sorted(pairs)[0]}")

    # mirror across sides and corners to bound and clip the diagram
    mirrored = [seeds]
    mx = [2 * xmin - seeds[:, 0], 2 * xmax - seeds[:, 0]]
    my = [2 * ymin - seeds[:, 1], 2 * ymax - seeds[:, 1]]
    for vx in mx:
        mirrored.append(np.column_stack([vx, seeds[:, 1]]))
    for vy in my:
        mirrored.append(np.column_stack([seeds[:, 0], vy]))
    for vx in mx:
        for vy in my:
            mirrored.append(np.column_stack([vx, vy]))
    allpts = np.vstack(mirrored)

    vor = Voronoi(allpts)

    merge = params.merge_tol * hmin
    bank = {}
    node_xy = []

    def node_of(v):
        x, y = vor.vertices[v]
        key = (round(x / merge), round(y / merge))
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                hit = bank.get((key[0] + dx, key[1] + dy))
                if hit is not None:
                    px, py = node_xy[hit]
                    if math.hypot(px - x, py - y) <= merge:
                        return hit
        idx = len(node_xy)
        node_xy.append((x, y))
        bank[key] = idx
        return idx

    loops = []
    for i in range(n_int):
        region = vor.regions[vor.point_region[i]]
        if -1 in region or not region:
            raise MeshError("unbounded Voronoi region for an interior seed")
        ids = []
        for v in region:
            nid = node_of(v)
            if not ids or (nid != ids[-1] and nid != ids[0]):
                ids.append(nid)
        if len(ids) < 3:
            raise MeshError("degenerate Voronoi cell after vertex merging")
        pts = np.asarray([node_xy[k] for k in ids])
        ang = np.arctan2(pts[:, 1] - seeds[i, 1], pts[:, 0] - seeds[i, 0])
        loops.append([ids[k] for k in np.argsort(ang)])

    node_xy = np.asarray(node_xy, float)
    # snap vertices exactly onto the geometry they approximate
    snapw = 4 * merge
    for j, (x, y) in enumerate(node_xy):
        if abs(x - xmin) < snapw:
            node_xy[j, 0] = xmin
        elif abs(x - xmax) < snapw:
            node_xy[j, 0] = xmax
        if abs(y - ymin) < snapw:
            node_xy[j, 1] = ymin
        elif abs(y - ymax) < snapw:
            node_xy[j, 1] = ymax
    anchors = [ip.location for ip in intersections]
    for br in branches:
        anchors += [br.p0, br.p1]
    for j in range(node_xy.shape[0]):
        for a in anchors:
            if np.hypot(*(node_xy[j] - a)) < snapw:
                node_xy[j] = a
                break
        else:
            for br in branches:
                t = br.tangent
                rel = node_xy[j] - br.p0
                s = rel @ t
                off = rel[0] * t[1] - rel[1] * t[0]
                if abs(off) < snapw and -snapw < s < br.length + snapw:
                    node_xy[j] = br.p0 + np.clip(s, 0, br.length) * t
                    break

    mesh = mesh_from_cell_loops(node_xy, loops)
    frac_faces = [faces_on_segment(mesh, br.p0, br.p1, tol=1e-9)
                  for br in branches]
    for bi, (br, ids) in enumerate(zip(branches, frac_faces)):
        cover = mesh.face_length[ids].sum()
        if abs(cover - br.length) > 1e-9 * br.length:
            raise MeshError(
                f"voronoi mesh does not conform to branch {bi}: covered "
                f"{cover:.12g} of {br.length:.12g}")
    return mesh, frac_faces
