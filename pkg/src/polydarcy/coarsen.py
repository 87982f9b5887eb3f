"""Agglomeration coarsening of polygonal meshes.

Two grouping criteria: by volume (small cells are merged with a
neighbour until every cell is comparable to the mean size) and by
connection strength (cells joined along faces whose two-point
transmissibility is strong relative to the row maximum, the classical
algebraic-multigrid rule).  Merges never cross protected faces, so a
fracture-conforming mesh stays conforming.  Agglomerates keep every
surviving original face as a dof-carrying face; only faces interior to a
group are removed.
"""

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, MeshError
from .mesh import build_poly_mesh


@dataclass
class CoarsenParams:
    mode: str = "by_volume"          # "by_volume" | "by_strength"
    volume_factor: float = 0.5       # by_volume: merge below factor * mean
                                     # by_strength: target coarse/fine ratio
    strength_threshold: float = 0.25

    def __post_init__(self):
        if self.mode not in ("by_volume", "by_strength"):
            raise GeometryError(f"unknown coarsening mode {self.mode!r}")
        if not 0 < self.volume_factor <= 1:
            raise GeometryError("volume factor must lie in (0, 1]")
        if not 0 < self.strength_threshold < 1:
            raise GeometryError("strength threshold must lie in (0, 1)")


class _Groups:
    """Union-find over cells."""

    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, i):
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i, j):
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[max(ri, rj)] = min(ri, rj)


def _rebuild(mesh, groups, protected):
    """Coarse mesh, coarse->fine cell map and old->new face map."""
    n = mesh.n_cells
    root = np.array([groups.find(c) for c in range(n)])
    order = {}
    for c in range(n):
        order.setdefault(root[c], len(order))
    coarse_of = np.array([order[root[c]] for c in range(n)])

    keep = np.ones(mesh.n_faces, dtype=bool)
    for f in range(mesh.n_faces):
        cp, cm = mesh.face_cells[f]
        if cm >= 0 and coarse_of[cp] == coarse_of[cm]:
            if f in protected:
                raise MeshError("merge removed a protected face")
            keep[f] = False
    new_id = np.full(mesh.n_faces, -1, dtype=np.int64)
    new_id[keep] = np.arange(keep.sum())

    cells = [([], []) for _ in range(len(order))]
    for c in range(n):
        f_ids, signs = mesh.cell_faces(c)
        cc = coarse_of[c]
        for f, s in zip(f_ids, signs):
            if keep[f]:
                cells[cc][0].append(int(new_id[f]))
                cells[cc][1].append(int(s))
    coarse = build_poly_mesh(mesh.node_xy, mesh.face_nodes[keep],
                             [(np.array(a), np.array(b)) for a, b in cells],
                             boundary_tag=mesh.boundary_tag[keep])
    cell_map = [[] for _ in range(len(order))]
    for c in range(n):
        cell_map[coarse_of[c]].append(c)
    return coarse, cell_map, new_id


def agglomerate_by_volume(mesh, params=None, protected_faces=()):
    """Merge small cells with neighbours until sizes are comparable.

    The threshold is ``volume_factor`` times the mean cell area of the
    input mesh; the neighbour sharing the longest interface wins (ties
    go to the smaller cell id).  Returns
    ``(coarse mesh, coarse->fine cell lists, old->new face ids)``.
    """
    params = params or CoarsenParams()
    protected = set(int(f) for f in protected_faces)
    threshold = params.volume_factor * mesh.cell_area.mean()
    groups = _Groups(mesh.n_cells)
    area = {c: mesh.cell_area[c] for c in range(mesh.n_cells)}

    def neighbours():
        """Group adjacency with accumulated shared face length.

        Pairs that touch across a protected face anywhere are excluded
        entirely, otherwise a merge through a side face would swallow
        the protected one.
        """
        adj = {}
        banned = set()
        for f in range(mesh.n_faces):
            cp, cm = mesh.face_cells[f]
            if cm < 0:
                continue
            gp, gm = groups.find(cp), groups.find(cm)
            if gp == gm:
                continue
            key = (min(gp, gm), max(gp, gm))
            if f in protected:
                banned.add(key)
            else:
                adj[key] = adj.get(key, 0.0) + mesh.face_length[f]
        return {k: v for k, v in adj.items() if k not in banned}

    while True:
        adj = neighbours()
        live = sorted({groups.find(c) for c in range(mesh.n_cells)})
        small = [g for g in live if area[g] < threshold]
        if not small:
            break
        small.sort(key=lambda g: (area[g], g))
        merged_any = False
        for g in small:
            best = None
            for (a, b), length in adj.items():
                if g not in (a, b):
                    continue
                other = b if a == g else a
                cand = (length, -other)
                if best is None or cand > best[0]:
                    best = (cand, other)
            if best is None:
                continue
            other = best[1]
            groups.union(g, other)
            r = groups.find(g)
            area[r] = area[g] + area[other]
            merged_any = True
            break
        if not merged_any:
            break
    return _rebuild(mesh, groups, protected)


def tpfa_face_transmissibility(mesh, k_cells):
    """Two-point transmissibility of every interior face."""
    k_cells = np.asarray(k_cells, float)
    if np.any(k_cells <= 0):
        raise GeometryError("non-positive permeability")
    mid = mesh.face_midpoints()
    trans = np.zeros(mesh.n_faces)
    for f in mesh.interior_faces():
        cp, cm = mesh.face_cells[f]
        nrm = mesh.face_normal[f]
        dp = abs(np.dot(mid[f] - mesh.cell_centroid[cp], nrm))
        dm = abs(np.dot(mid[f] - mesh.cell_centroid[cm], nrm))
        tp = k_cells[cp] * mesh.face_length[f] / max(dp, 1e-300)
        tm = k_cells[cm] * mesh.face_length[f] / max(dm, 1e-300)
        trans[f] = tp * tm / (tp + tm)
    return trans


def agglomerate_by_strength(mesh, k_cells, params=None, protected_faces=()):
    """Aggregate cells along strong two-point connections.

    A neighbour is a strong candidate of a cell when the face
    transmissibility reaches ``strength_threshold`` times the cell's
    largest connection.  Aggregates grow greedily from each unassigned
    cell, strongest candidate first, up to ``round(1/volume_factor)``
    members, so the coarse cell count lands near ``volume_factor`` times
    the input count.
    """
    params = params or CoarsenParams(mode="by_strength")
    protected = set(int(f) for f in protected_faces)
    trans = tpfa_face_transmissibility(mesh, k_cells)

    nbr = [[] for _ in range(mesh.n_cells)]
    forbidden = {}
    for f in mesh.interior_faces():
        cp, cm = mesh.face_cells[f]
        if f in protected:
            forbidden.setdefault(int(cp), set()).add(int(cm))
            forbidden.setdefault(int(cm), set()).add(int(cp))
            continue
        if trans[f] <= 0:
            continue
        nbr[cp].append((int(cm), trans[f]))
        nbr[cm].append((int(cp), trans[f]))
    row_max = np.zeros(mesh.n_cells)
    for c in range(mesh.n_cells):
        if nbr[c]:
            row_max[c] = max(t for _, t in nbr[c])

    cap = max(1, int(round(1.0 / params.volume_factor)))
    theta = params.strength_threshold
    assigned = np.full(mesh.n_cells, -1, dtype=np.int64)
    groups = _Groups(mesh.n_cells)
    for seed in range(mesh.n_cells):
        if assigned[seed] >= 0:
            continue
        assigned[seed] = seed
        members = [seed]
        while len(members) < cap:
            best = None
            for m in members:
                for other, t in nbr[m]:
                    if assigned[other] >= 0 or t < theta * row_max[m]:
                        continue
                    if any(other in forbidden.get(x, ()) for x in members):
                        continue
                    cand = (t, -other)
                    if best is None or cand > best[0]:
                        best = (cand, other)
            if best is None:
                break
            other = best[1]
            assigned[other] = seed
            groups.union(seed, other)
            members.append(other)
    # second pass: fold undersized aggregates into their strongest
    # neighbour while staying below twice the target size
    members = {}
    for c in range(mesh.n_cells):
        members.setdefault(groups.find(c), []).append(c)
    for root in sorted(members):
        root = groups.find(root)
        cells = members.get(root)
        if cells is None or len(cells) > cap // 2:
            continue
        best = None
        for c in cells:
            for other, t in nbr[c]:
                # mutual strength: a leftover cell whose only face is
                # weak in absolute terms must stay a singleton
                if t < theta * max(row_max[c], row_max[other]):
                    continue
                oroot = groups.find(other)
                if oroot == root or \
                        len(members.get(oroot, ())) + len(cells) > 2 * cap:
                    continue
                if any(o in forbidden.get(x, ()) for x in cells
                       for o in members.get(oroot, ())):
                    continue
                cand = (t, -oroot)
                if best is None or cand > best[0]:
                    best = (cand, oroot)
        if best is not None:
            oroot = best[1]
            merged = members.pop(root) + members.pop(oroot)
            groups.union(root, oroot)
            members[groups.find(oroot)] = merged
    return _rebuild(mesh, groups, protected)
