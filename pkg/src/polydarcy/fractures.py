"""Fracture networks, branch splitting and the mixed-dimensional mesh.

A network of straight fractures is split into branches at intersection
points; a bulk mesh conforming to every branch is then bundled with one
1D grid per branch and two mortar interfaces (one per side) whose cells
coincide with the fracture cells.
"""

from dataclasses import dataclass, field

import numpy as np

from . import mesh as pm
from .errors import ConformityError, GeometryError
from .mesh import SegmentMesh, faces_on_segment

END_INTERSECTION = 3  # segment-end tag in addition to the mesh-level ones


class FractureNetwork:
    """Straight fracture segments with hydraulic data.

    Per fracture: two endpoints, aperture, tangential permeability and
    normal permeability.
    """

    def __init__(self, endpoints, aperture, k_tangential, k_normal):
        endpoints = np.asarray(endpoints, float).reshape(-1, 2, 2)
        n = endpoints.shape[0]
        self.endpoints = endpoints
        self.aperture = np.broadcast_to(np.asarray(aperture, float), (n,)).copy()
        self.k_tangential = np.broadcast_to(
            np.asarray(k_tangential, float), (n,)).copy()
        self.k_normal = np.broadcast_to(np.asarray(k_normal, float), (n,)).copy()
        if np.any(self.aperture <= 0):
            raise GeometryError("fracture aperture must be positive")
        if np.any(self.k_tangential <= 0) or np.any(self.k_normal <= 0):
            raise GeometryError("fracture permeabilities must be positive")
        lens = np.linalg.norm(endpoints[:, 1] - endpoints[:, 0], axis=1)
        if np.any(lens <= 0):
            raise GeometryError("fracture endpoints coincide")

    @property
    def n_fractures(self):
        return self.endpoints.shape[0]

    def diameter(self):
        pts = self.endpoints.reshape(-1, 2)
        lo, hi = pts.min(0), pts.max(0)
        return float(np.hypot(*(hi - lo))) or 1.0


@dataclass
class Branch:
    """Piece of a fracture between intersections/endpoints."""
    fracture: int
    p0: np.ndarray
    p1: np.ndarray
    aperture: float
    k_tangential: float
    k_normal: float

    @property
    def length(self):
        return float(np.hypot(*(self.p1 - self.p0)))

    @property
    def tangent(self):
        d = self.p1 - self.p0
        return d / np.hypot(*d)


@dataclass
class IntersectionPoint:
    """Meeting point of two or more fracture branches.

    ``incident`` lists ``(branch index, end, alpha)`` where ``end`` is 0
    or 1 and ``alpha`` maps the branch-end velocity dof (oriented along
    the branch tangent) to the discharge into the intersection.
    """
    location: np.ndarray
    incident: list = field(default_factory=list)
    eps: float = 0.0
    kappa: float = 0.0

    @property
    def n_branches(self):
        return len(self.incident)

    def outward_tangent(self, branches, which):
        br, end, _ = self.incident[which]
        t = branches[br].tangent
        return t if end == 0 else -t


def _seg_intersection(p0, p1, q0, q1, tol):
    """Intersection of two segments; returns (point, s, t) or None.

    Raises on collinear overlap of positive length.
    """
    d1 = p1 - p0
    d2 = q1 - q0
    denom = d1[0] * d2[1] - d1[1] * d2[0]
    r = q0 - p0
    L1 = np.hypot(*d1)
    L2 = np.hypot(*d2)
    if abs(denom) <= tol * L1 * L2:
        # parallel: overlapping collinear segments are rejected, but an
        # end-to-end contact counts as a pass-through intersection
        off = abs(r[0] * d1[1] - r[1] * d1[0]) / L1
        if off > tol:
            return None
        s0 = np.dot(q0 - p0, d1) / L1**2
        s1 = np.dot(q1 - p0, d1) / L1**2
        lo, hi = min(s0, s1), max(s0, s1)
        overlap = min(hi, 1.0) - max(lo, 0.0)
        if overlap * L1 > tol:
            raise GeometryError("overlapping collinear fractures")
        if overlap * L1 >= -tol:
            s = 0.5 * (max(lo, 0.0) + min(hi, 1.0))
            s = min(max(s, 0.0), 1.0)
            pt = p0 + s * d1
            t = np.dot(pt - q0, d2) / L2**2
            return pt, s, min(max(t, 0.0), 1.0)
        return None
    s = (r[0] * d2[1] - r[1] * d2[0]) / denom
    t = (r[0] * d1[1] - r[1] * d1[0]) / denom
    rel = tol / min(L1, L2)
    if -rel <= s <= 1 + rel and -rel <= t <= 1 + rel:
        s = min(max(s, 0.0), 1.0)
        t = min(max(t, 0.0), 1.0)
        return p0 + s * d1, s, t
    return None


def split_network(network, tol_rel=1e-9, eps_override=None,
                  kappa_override=None):
    """Split fractures into branches at mutual intersection points.

    Endpoint-to-interior (T/L) and endpoint-to-endpoint contacts count as
    intersections.  The intersection aperture defaults to the smallest
    incident aperture, its permeability to the harmonic mean of the
    incident normal permeabilities; both can be overridden.

    Returns ``(branches, intersections)`` in a canonical order that does
    not depend on the input fracture order.
    """
    tol = tol_rel * network.diameter()
    nf = network.n_fractures
    cut_params = [[0.0, 1.0] for _ in range(nf)]
    points = []  # (location, {fracture ids})

    for i in range(nf):
        for j in range(i + 1, nf):
            hit = _seg_intersection(network.endpoints[i, 0],
                                    network.endpoints[i, 1],
                                    network.endpoints[j, 0],
                                    network.endpoints[j, 1], tol)
            if hit is None:
                continue
            pt, s, t = hit
            cut_params[i].append(s)
            cut_params[j].append(t)
            points.append((pt, {i, j}))

    # merge intersection points that coincide within tolerance
    merged = []
    for pt, fr in points:
        for mp in merged:
            if np.hypot(*(mp[0] - pt)) <= tol:
                mp[1] |= fr
                break
        else:
            merged.append([pt.copy(), set(fr)])

    branches = []
    for i in range(nf):
        L = np.hypot(*(network.endpoints[i, 1] - network.endpoints[i, 0]))
        params = np.sort(np.clip(cut_params[i], 0.0, 1.0))
        # merge parameters closer than tol along the fracture
        keep = [0.0]
        for p in params:
            if (p - keep[-1]) * L > tol:
                keep.append(float(p))
        if (1.0 - keep[-1]) * L > tol:
            keep.append(1.0)
        else:
            keep[-1] = 1.0
        p0, p1 = network.endpoints[i]
        for a, b in zip(keep[:-1], keep[1:]):
            branches.append(Branch(i, p0 + a * (p1 - p0), p0 + b * (p1 - p0),
                                   network.aperture[i],
                                   network.k_tangential[i],
                                   network.k_normal[i]))

    # canonical branch order: by fracture, then along it
    branches.sort(key=lambda br: (br.fracture, tuple(np.round(
        0.5 * (br.p0 + br.p1), 12))))

    intersections = []
    for pt, fr in sorted(merged, key=lambda m: (round(m[0][0], 12),
                                                round(m[0][1], 12))):
        inc = []
        for bi, br in enumerate(branches):
            if np.hypot(*(br.p0 - pt)) <= tol:
                inc.append((bi, 0, -1))
            elif np.hypot(*(br.p1 - pt)) <= tol:
                inc.append((bi, 1, +1))
        if len(inc) < 2:
            raise GeometryError("degenerate intersection with fewer than "
                                "two incident branches")
        eps = (eps_override if eps_override is not None
               else float(min(network.aperture[f] for f in fr)))
        if kappa_override is not None:
            kappa = kappa_override
        else:
            kn = np.array([network.k_normal[f] for f in sorted(fr)])
            kappa = float(len(kn) / np.sum(1.0 / kn))
        intersections.append(IntersectionPoint(np.asarray(pt, float), inc,
                                               eps, kappa))
    return branches, intersections


class MixedDimMesh:
    """Bulk mesh plus conforming fracture grids and mortar interfaces.

    Every fracture cell coincides with exactly one bulk face; the face's
    velocity dof is doubled at assembly, one copy per side.  The plus
    side of a branch is the side its normal (tangent rotated by -90
    degrees) points away from, i.e. the cell whose outward normal equals
    the branch normal.
    """

    def __init__(self, bulk, branches, frac_meshes, frac_faces,
                 plus_cells, minus_cells, orients, intersections):
        self.bulk = bulk
        self.branches = branches
        self.frac_meshes = frac_meshes
        self.frac_faces = frac_faces
        self.plus_cells = plus_cells
        self.minus_cells = minus_cells
        # +1 where the stored face normal equals the branch normal
        self.orients = orients
        self.intersections = intersections
        self.frac_face_set = {int(f) for ff in frac_faces for f in ff}

    @property
    def n_branches(self):
        return len(self.branches)

    @property
    def n_frac_cells(self):
        return sum(sm.n_cells for sm in self.frac_meshes)

    def mortar_cells(self):
        """Iterate ``(branch, cell, side, bulk face, bulk cell, sigma)``.

        ``sigma`` is the orientation sign of the duplicated face within
        its bulk cell, i.e. the coefficient mapping the stored flux dof
        to the outflow of that cell into the fracture.
        """
        for b in range(self.n_branches):
            for k, f in enumerate(self.frac_faces[b]):
                o = int(self.orients[b][k])
                yield b, k, +1, int(f), int(self.plus_cells[b][k]), o
                yield b, k, -1, int(f), int(self.minus_cells[b][k]), -o


def build_mixed_mesh(bulk, branches, intersections=(), frac_faces=None,
                     tol_rel=1e-10):
    """Bundle a conforming bulk mesh with its fracture grids.

    ``frac_faces`` may carry precomputed face chains per branch (as
    produced by the generators); otherwise faces are detected
    geometrically.  Raises :class:`ConformityError` when a branch is not
    exactly tiled by bulk faces.
    """
    h = bulk.cell_diameter.min() if bulk.n_cells else 1.0
    frac_meshes = []
    face_chains = []
    plus_cells = []
    minus_cells = []
    orient_list = []
    for bi, br in enumerate(branches):
        if frac_faces is not None:
            ids = np.asarray(frac_faces[bi], dtype=np.int64)
        else:
            ids = faces_on_segment(bulk, br.p0, br.p1, tol=1e-9)
        if ids.size == 0:
            raise ConformityError(
                f"branch {bi} is not covered by any bulk face")
        t = br.tangent
        # order faces along the branch and verify the chain is gap-free
        s_lo = np.empty(ids.size)
        s_hi = np.empty(ids.size)
        for k, f in enumerate(ids):
            sa = np.dot(bulk.node_xy[bulk.face_nodes[f, 0]] - br.p0, t)
            sb = np.dot(bulk.node_xy[bulk.face_nodes[f, 1]] - br.p0, t)
            s_lo[k], s_hi[k] = min(sa, sb), max(sa, sb)
        order = np.argsort(s_lo)
        ids, s_lo, s_hi = ids[order], s_lo[order], s_hi[order]
        gap = max(abs(s_lo[0]), abs(s_hi[-1] - br.length))
        if ids.size > 1:
            gap = max(gap, np.abs(s_lo[1:] - s_hi[:-1]).max())
        if gap > max(tol_rel * h, 1e-12 * br.length):
            raise ConformityError(
                f"bulk mesh does not conform to branch {bi} "
                f"(largest gap {gap:.2e})")

        node_s = np.concatenate([s_lo, s_hi[-1:]])
        node_xy = br.p0 + node_s[:, None] * t
        end_tags = [pm.TIP_NOFLOW, pm.TIP_NOFLOW]
        for ip in intersections:
            for b2, end, _ in ip.incident:
                if b2 == bi:
                    end_tags[end] = END_INTERSECTION
        frac_meshes.append(SegmentMesh(node_s, node_xy, t, end_tags))
        face_chains.append(ids)

        n_b = np.array([t[1], -t[0]])
        pc = np.empty(ids.size, dtype=np.int64)
        mc = np.empty(ids.size, dtype=np.int64)
        orient = np.empty(ids.size, dtype=np.int8)
        for k, f in enumerate(ids):
            cp, cm = bulk.face_cells[f]
            if cm < 0:
                raise ConformityError(
                    f"fracture face {f} lies on the domain boundary")
            if np.dot(bulk.face_normal[f], n_b) > 0:
                pc[k], mc[k] = cp, cm
                orient[k] = 1
            else:
                pc[k], mc[k] = cm, cp
                orient[k] = -1
        plus_cells.append(pc)
        minus_cells.append(mc)
        orient_list.append(orient)

    return MixedDimMesh(bulk, branches, frac_meshes, face_chains,
                        plus_cells, minus_cells, orient_list,
                        list(intersections))
