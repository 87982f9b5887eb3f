"""Global saddle-point assembly for bulk and fractured Darcy problems.

Unknown blocks, in order: bulk face fluxes (fracture faces excluded),
bulk cell pressures, fracture nodal velocities, fracture cell pressures,
doubled fracture-face fluxes (one per side, acting as the interface flux
exchange), intersection pressures.

Velocity dofs are integrated fluxes along the stored face normal; on the
1D grids they are tangential point values oriented along the branch.
Essential flux conditions are imposed by symmetric row/column
elimination so the assembled pattern stays structurally symmetric.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps

from . import mesh as pm
from .errors import ConfigError, MeshError
from .fractures import END_INTERSECTION
from .mvem import (_cell_tensor, cell_face_data, local_matrices,
                   local_matrices_1d)


@dataclass
class BoundaryConditions:
    """Boundary data for one problem.

    ``pressure`` and ``flux`` are face arrays; only entries of faces
    tagged NATURAL_P / ESSENTIAL_U are read.  ``frac_end_pressure`` and
    ``frac_end_flux`` map ``(branch, end)`` to endpoint data of the 1D
    grids.  ``source``/``frac_source`` are cell-wise constants.
    """
    pressure: np.ndarray
    flux: np.ndarray
    source: np.ndarray = None
    frac_end_pressure: dict = field(default_factory=dict)
    frac_end_flux: dict = field(default_factory=dict)
    frac_source: dict = field(default_factory=dict)


def apply_side_bc(mesh, side_spec, source=None, tol=1e-10):
    """Tag the four bounding-box sides and collect their values.

    ``side_spec`` maps ``xmin``/``xmax``/``ymin``/``ymax`` to
    ``("pressure", value)`` or ``("flux", value)`` where ``value`` may be
    a constant or a callable of ``(x, y)``.  Returns a re-tagged mesh and
    the matching :class:`BoundaryConditions`.
    """
    tags = mesh.boundary_tag.copy()
    pressure = np.full(mesh.n_faces, np.nan)
    flux = np.zeros(mesh.n_faces)
    mid = mesh.face_midpoints()
    for side, (kind, value) in side_spec.items():
        faces = pm.boundary_faces_on_side(mesh, side, tol)
        vals = (np.array([value(x, y) for x, y in mid[faces]], dtype=float)
                if callable(value) else np.full(faces.size, float(value)))
        if kind == "pressure":
            tags[faces] = pm.NATURAL_P
            pressure[faces] = vals
        elif kind == "flux":
            tags[faces] = pm.ESSENTIAL_U
            flux[faces] = vals
        else:
            raise ConfigError(f"unknown boundary condition kind {kind!r}")
    src = None
    if source is not None:
        src = (np.array([source(x, y) for x, y in mesh.cell_centroid])
               if callable(source) else np.full(mesh.n_cells, float(source)))
    return mesh.copy_with_tags(tags), BoundaryConditions(pressure, flux, src)


def dirichlet_everywhere(mesh, p_fn, source=None):
    """Pressure data on the whole boundary (patch-test helper)."""
    tags = np.where(mesh.face_cells[:, 1] < 0, pm.NATURAL_P,
                    pm.INTERIOR).astype(np.int8)
    mid = mesh.face_midpoints()
    pressure = np.full(mesh.n_faces, np.nan)
    bnd = mesh.boundary_faces()
    pressure[bnd] = [p_fn(x, y) for x, y in mid[bnd]]
    src = None
    if source is not None:
        src = (np.array([source(x, y) for x, y in mesh.cell_centroid])
               if callable(source) else np.full(mesh.n_cells, float(source)))
    return mesh.copy_with_tags(tags), BoundaryConditions(pressure,
                                                         np.zeros(mesh.n_faces),
                                                         src)


class DofMap:
    """Contiguous dof blocks over all unknown fields."""

    def __init__(self, mesh, mixed=None):
        frac_faces = mixed.frac_face_set if mixed is not None else set()
        self.u_face = np.full(mesh.n_faces, -1, dtype=np.int64)
        nxt = 0
        for f in range(mesh.n_faces):
            if f not in frac_faces:
                self.u_face[f] = nxt
                nxt += 1
        self.n_u = nxt
        self.p_off = nxt
        nxt += mesh.n_cells

        self.uf_off = []
        self.pf_off = []
        if mixed is not None:
            for sm in mixed.frac_meshes:
                self.uf_off.append(nxt)
                nxt += sm.n_nodes
            for sm in mixed.frac_meshes:
                self.pf_off.append(nxt)
                nxt += sm.n_cells
        self.lam_plus = {}
        self.lam_minus = {}
        if mixed is not None:
            for b in range(mixed.n_branches):
                for k, f in enumerate(mixed.frac_faces[b]):
                    self.lam_plus[int(f)] = nxt
                    self.lam_minus[int(f)] = nxt + 1
                    nxt += 2
        self.pi_off = nxt
        nxt += len(mixed.intersections) if mixed is not None else 0
        self.n_dof = nxt
        self.n_cells = mesh.n_cells

    def p_cell(self, c):
        return self.p_off + c

    def u_node(self, branch, node):
        return self.uf_off[branch] + node

    def p_frac(self, branch, cell):
        return self.pf_off[branch] + cell

    def p_iota(self, i):
        return self.pi_off + i

    def blocks(self):
        out = {"u_bulk": (0, self.n_u),
               "p_bulk": (self.p_off, self.p_off + self.n_cells)}
        if self.uf_off:
            out["u_frac"] = (self.uf_off[0], self.pf_off[0])
            out["p_frac"] = (self.pf_off[0],
                             min(self.lam_plus.values()) if self.lam_plus
                             else self.pi_off)
            out["lambda"] = (min(self.lam_plus.values()), self.pi_off) \
                if self.lam_plus else (self.pi_off, self.pi_off)
        out["p_iota"] = (self.pi_off, self.n_dof)
        return out


@dataclass
class SparseSystem:
    """Assembled linear system with its dof map and provenance."""
    matrix: sps.csr_matrix
    rhs: np.ndarray
    dofmap: DofMap
    mesh: object
    mixed: object = None
    k_cells: object = None
    bc: BoundaryConditions = None

    @property
    def n_dof(self):
        return self.rhs.shape[0]


def _validate_bc(mesh, bc):
    bnd = mesh.boundary_faces()
    tags = mesh.boundary_tag[bnd]
    nat = bnd[tags == pm.NATURAL_P]
    if np.any(~np.isfinite(bc.pressure[nat])):
        raise ConfigError("missing pressure value on a natural boundary face")
    if np.any(tags == pm.INTERIOR):
        raise ConfigError("missing boundary condition on a boundary face")


class _Builder:
    def __init__(self, n):
        self.rows, self.cols, self.vals = [], [], []
        self.rhs = np.zeros(n)
        self.essential = {}

    def add(self, i, j, v):
        self.rows.append(i)
        self.cols.append(j)
        self.vals.append(v)

    def add_local(self, dofs, signs, mat):
        k = len(dofs)
        for a in range(k):
            for b in range(k):
                v = signs[a] * signs[b] * mat[a, b]
                if v != 0.0:
                    self.add(dofs[a], dofs[b], v)

    def finish(self):
        from .linalg import consolidate_triplets
        n = self.rhs.shape[0]
        A = consolidate_triplets(np.asarray(self.rows), np.asarray(self.cols),
                                 np.asarray(self.vals, dtype=float), n)
        if self.essential:
            idx = np.fromiter(self.essential.keys(), dtype=np.int64)
            vals = np.fromiter(self.essential.values(), dtype=float)
            self.rhs -= A[:, idx] @ vals
            keep = np.ones(n)
            keep[idx] = 0.0
            D = sps.diags(keep)
            A = (D @ A @ D + sps.diags(1.0 - keep)).tocsr()
            A.eliminate_zeros()
            A.sort_indices()
            self.rhs[idx] = vals
        return A, self.rhs


def _bulk_contributions(builder, mesh, k_cells, bc, dof, face_dof):
    """MVEM cell blocks, divergence coupling, boundary data and sources.

    ``face_dof`` maps a (face, cell) pair to the velocity dof, allowing
    the fracture assembly to reroute duplicated faces per side.
    """
    mids = mesh.face_midpoints()
    for c in range(mesh.n_cells):
        f_ids, signs, lengths, normals, mid_c = cell_face_data(mesh, c)
        a_cons, s = local_matrices(lengths, normals, mid_c,
                                   mesh.cell_centroid[c], mesh.cell_area[c],
                                   _cell_tensor(k_cells, c))
        dofs = [face_dof(int(f), c) for f in f_ids]
        fsigns = signs.astype(float)
        builder.add_local(dofs, fsigns, a_cons + s)
        pc = dof.p_cell(c)
        for d, sgn in zip(dofs, fsigns):
            builder.add(d, pc, -sgn)
            builder.add(pc, d, -sgn)
    # boundary data
    for f in mesh.boundary_faces():
        d = face_dof(int(f), int(mesh.face_cells[f, 0]))
        if mesh.boundary_tag[f] == pm.NATURAL_P:
            builder.rhs[d] -= bc.pressure[f]
        else:
            builder.essential[d] = bc.flux[f] * mesh.face_length[f]
    if bc.source is not None:
        for c in range(mesh.n_cells):
            builder.rhs[dof.p_cell(c)] -= mesh.cell_area[c] * bc.source[c]


def assemble_bulk(mesh, k_cells, bc, gauge=False):
    """Saddle-point system of the fracture-free Darcy problem.

    Requires at least one natural (pressure) boundary face, or
    ``gauge=True`` to pin the first cell pressure to zero.
    """
    _validate_bc(mesh, bc)
    dof = DofMap(mesh)
    builder = _Builder(dof.n_dof)
    _bulk_contributions(builder, mesh, k_cells, bc, dof,
                        lambda f, c: int(dof.u_face[f]))
    has_natural = np.any(mesh.boundary_tag == pm.NATURAL_P)
    if not has_natural:
        if not gauge:
            raise ConfigError("all-essential boundary needs a pressure gauge")
        builder.essential[dof.p_cell(0)] = 0.0
    A, rhs = builder.finish()
    return SparseSystem(A, rhs, dof, mesh, k_cells=k_cells, bc=bc)


def assemble_fractured(mixed, k_cells, bc, gauge=False):
    """Saddle-point system of the hybrid-dimensional Darcy problem.

    Fracture faces carry one flux dof per side; their rows combine the
    bulk cell blocks with the interface resistance (aperture over normal
    permeability, per unit interface length) and the coupling to the
    fracture pressure, realizing the two-sided Robin interface law with
    the neighbouring cell pressure as bulk trace.  Intersection points
    are coupled afterwards through :func:`assemble_intersections`.
    """
    mesh = mixed.bulk
    _validate_bc(mesh, bc)
    dof = DofMap(mesh, mixed)
    builder = _Builder(dof.n_dof)

    plus_cell_of = {}
    branch_of_face = {}
    for b in range(mixed.n_branches):
        for k, f in enumerate(mixed.frac_faces[b]):
            plus_cell_of[int(f)] = int(mixed.plus_cells[b][k])
            branch_of_face[int(f)] = (b, k)

    def face_dof(f, c):
        d = dof.u_face[f]
        if d >= 0:
            return int(d)
        return dof.lam_plus[f] if plus_cell_of[f] == c else dof.lam_minus[f]

    _bulk_contributions(builder, mesh, k_cells, bc, dof, face_dof)

    # interface terms: resistance on the doubled dofs and exchange with
    # the fracture pressure; the coupling coefficient is the outward
    # orientation of the duplicated face in its cell
    for b, k, side, f, _cell, sigma in mixed.mortar_cells():
        br = mixed.branches[b]
        eta = br.aperture / br.k_normal
        m_len = mixed.frac_meshes[b].lengths[k]
        lam = dof.lam_plus[f] if side > 0 else dof.lam_minus[f]
        pf = dof.p_frac(b, k)
        builder.add(lam, lam, eta / m_len)
        builder.add(lam, pf, float(sigma))
        builder.add(pf, lam, float(sigma))

    # 1D MVEM blocks and fracture boundary data
    for b, sm in enumerate(mixed.frac_meshes):
        br = mixed.branches[b]
        inv_k_eff = 1.0 / (br.aperture * br.k_tangential)
        for k in range(sm.n_cells):
            a_cons, s = local_matrices_1d(sm.lengths[k], inv_k_eff)
            dofs = [dof.u_node(b, k), dof.u_node(b, k + 1)]
            signs = np.array([-1.0, 1.0])
            builder.add_local(dofs, signs, a_cons + s)
            pf = dof.p_frac(b, k)
            for d, sgn in zip(dofs, signs):
                builder.add(d, pf, -sgn)
                builder.add(pf, d, -sgn)
        src = bc.frac_source.get(b)
        if src is not None:
            for k in range(sm.n_cells):
                builder.rhs[dof.p_frac(b, k)] -= sm.lengths[k] * src
        for end, node, sgn in ((0, 0, -1.0), (1, sm.n_nodes - 1, 1.0)):
            tag = sm.end_tags[end]
            d = dof.u_node(b, node)
            if tag == END_INTERSECTION:
                continue
            if tag == pm.END_NATURAL_P:
                pbar = bc.frac_end_pressure.get((b, end))
                if pbar is None:
                    raise ConfigError(
                        f"missing pressure at branch {b} end {end}")
                builder.rhs[d] -= sgn * pbar
            elif tag in (pm.TIP_NOFLOW, pm.END_ESSENTIAL_U):
                ubar = bc.frac_end_flux.get((b, end), 0.0)
                builder.essential[d] = sgn * ubar

    assemble_intersections(builder, dof, mixed)

    has_natural = np.any(mesh.boundary_tag == pm.NATURAL_P) or any(
        t == pm.END_NATURAL_P for sm in mixed.frac_meshes
        for t in sm.end_tags)
    if not has_natural:
        if not gauge:
            raise ConfigError("all-essential boundary needs a pressure gauge")
        builder.essential[dof.p_cell(0)] = 0.0

    A, rhs = builder.finish()
    return SparseSystem(A, rhs, dof, mesh, mixed=mixed, k_cells=k_cells,
                        bc=bc)


def assemble_intersections(builder, dof, mixed):
    """Add intersection coupling rows to an assembly in progress.

    Per incident branch end the endpoint velocity row receives the
    intersection resistance and the coupling to the intersection
    pressure; one conservation row per intersection balances the signed
    endpoint discharges.
    """
    for i, ip in enumerate(mixed.intersections):
        pi = dof.p_iota(i)
        eta = ip.eps / ip.kappa
        for b, end, alpha in ip.incident:
            sm = mixed.frac_meshes[b]
            node = 0 if end == 0 else sm.n_nodes - 1
            if sm.end_tags[end] != END_INTERSECTION:
                raise MeshError(
                    f"branch {b} lacks an endpoint dof at intersection {i}")
            d = dof.u_node(b, node)
            builder.add(d, d, eta)
            builder.add(d, pi, float(alpha))
            builder.add(pi, d, float(alpha))


@dataclass
class Solution:
    """Solved fields split by block."""
    u_face: np.ndarray      # signed flux per bulk face (both sides for
                            # fracture faces: plus side stored)
    p_cell: np.ndarray
    u_frac: list
    p_frac: list
    lam_plus: dict
    lam_minus: dict
    p_iota: np.ndarray
    raw: np.ndarray


def split_solution(system, x):
    """Split a solution vector into named fields."""
    dof = system.dofmap
    mesh = system.mesh
    u_face = np.zeros(mesh.n_faces)
    sel = dof.u_face >= 0
    u_face[sel] = x[dof.u_face[sel]]
    p_cell = x[dof.p_off:dof.p_off + mesh.n_cells]
    u_frac, p_frac = [], []
    lam_p, lam_m = {}, {}
    p_iota = np.zeros(0)
    if system.mixed is not None:
        mixed = system.mixed
        for b, sm in enumerate(mixed.frac_meshes):
            u_frac.append(x[dof.uf_off[b]:dof.uf_off[b] + sm.n_nodes])
            p_frac.append(x[dof.pf_off[b]:dof.pf_off[b] + sm.n_cells])
        # interface fluxes reported along the branch normal
        for b in range(mixed.n_branches):
            for k, f in enumerate(mixed.frac_faces[b]):
                o = float(mixed.orients[b][k])
                lam_p[int(f)] = o * x[dof.lam_plus[int(f)]]
                lam_m[int(f)] = o * x[dof.lam_minus[int(f)]]
                u_face[int(f)] = x[dof.lam_plus[int(f)]]
        p_iota = x[dof.pi_off:dof.n_dof]
    return Solution(u_face, p_cell.copy(), u_frac, p_frac, lam_p, lam_m,
                    p_iota.copy(), x)


def conservation_residuals(system, x):
    """Cell-wise mass balance of a solved system.

    For bulk cells the signed face fluxes minus the integrated source;
    for fracture cells also the exchange with the two interface fluxes.
    Returns (bulk residuals, fracture residuals list).
    """
    sol = split_solution(system, x)
    mesh = system.mesh
    dof = system.dofmap
    src = np.zeros(mesh.n_cells)
    if system.bc is not None and system.bc.source is not None:
        src = mesh.cell_area * system.bc.source
    bulk = np.zeros(mesh.n_cells)
    for c in range(mesh.n_cells):
        f_ids, signs = mesh.cell_faces(c)
        total = 0.0
        for f, s in zip(f_ids, signs):
            d = dof.u_face[f]
            if d >= 0:
                total += s * sol.raw[d]
            else:
                mixed = system.mixed
                lam = (dof.lam_plus[int(f)]
                       if _is_plus_side(mixed, int(f), c)
                       else dof.lam_minus[int(f)])
                total += s * sol.raw[lam]
        bulk[c] = total - src[c]
    frac = []
    if system.mixed is not None:
        for b, sm in enumerate(system.mixed.frac_meshes):
            res = np.zeros(sm.n_cells)
            fsrc = 0.0
            if system.bc is not None:
                fsrc = system.bc.frac_source.get(b, 0.0)
            for k in range(sm.n_cells):
                f = int(system.mixed.frac_faces[b][k])
                res[k] = (sol.u_frac[b][k + 1] - sol.u_frac[b][k]
                          - sol.lam_plus[f] + sol.lam_minus[f]
                          - sm.lengths[k] * fsrc)
            frac.append(res)
    return bulk, frac


def _is_plus_side(mixed, face, cell):
    for b in range(mixed.n_branches):
        hits = np.where(mixed.frac_faces[b] == face)[0]
        if hits.size:
            return int(mixed.plus_cells[b][hits[0]]) == cell
    raise KeyError(face)
