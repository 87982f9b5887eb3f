"""Two-point flux approximation, used as the reference scheme.

Consistent on K-orthogonal grids (uniform rectangles with scalar
permeability), which is the setting it is employed in here.
"""

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from . import mesh as pm
from .errors import NumericalError


def tpfa_transmissibility(face_length, k_left, d_left, k_right=None,
                          d_right=None):
    """Harmonic composition of one-sided transmissibilities K |e| / d.

    With only one side given (boundary face) the one-sided value is
    returned.
    """
    if d_left <= 0 or (d_right is not None and d_right <= 0):
        raise ValueError("non-positive center-to-face distance")
    t1 = k_left * face_length / d_left
    if k_right is None:
        return t1
    t2 = k_right * face_length / d_right
    return t1 * t2 / (t1 + t2)


def solve_tpfa(mesh, k_cells, bc):
    """Cell-centered finite volume solve of the Darcy problem.

    Parameters
    ----------
    mesh : PolyMesh with boundary tags set.
    k_cells : scalar permeability per cell.
    bc : BoundaryConditions; natural faces use the pressure value,
        essential faces the prescribed flux density.

    Returns
    -------
    (pressure per cell, signed flux per face) where the flux follows the
    stored face normal.
    """
    k_cells = np.asarray(k_cells, float)
    n = mesh.n_cells
    mid = mesh.face_midpoints()
    rows, cols, vals = [], [], []
    rhs = np.zeros(n)
    if bc.source is not None:
        rhs += mesh.cell_area * bc.source
    trans = np.zeros(mesh.n_faces)

    for f in range(mesh.n_faces):
        cp, cm = mesh.face_cells[f]
        nrm = mesh.face_normal[f]
        dp = abs(np.dot(mid[f] - mesh.cell_centroid[cp], nrm))
        if cm >= 0:
            dm = abs(np.dot(mid[f] - mesh.cell_centroid[cm], nrm))
            t = tpfa_transmissibility(mesh.face_length[f], k_cells[cp], dp,
                                      k_cells[cm], dm)
            trans[f] = t
            rows += [cp, cp, cm, cm]
            cols += [cp, cm, cm, cp]
            vals += [t, -t, t, -t]
        elif mesh.boundary_tag[f] == pm.NATURAL_P:
            t = tpfa_transmissibility(mesh.face_length[f], k_cells[cp], dp)
            trans[f] = t
            rows.append(cp)
            cols.append(cp)
            vals.append(t)
            rhs[cp] += t * bc.pressure[f]
        else:
            # sealed or prescribed inflow
            rhs[cp] -= bc.flux[f] * mesh.face_length[f]

    A = sps.csr_matrix((vals, (rows, cols)), shape=(n, n))
    A.sum_duplicates()
    p = spla.spsolve(A.tocsc(), rhs)
    if not np.isfinite(p).all():
        raise NumericalError("TPFA solve produced non-finite pressures")

    flux = np.zeros(mesh.n_faces)
    for f in range(mesh.n_faces):
        cp, cm = mesh.face_cells[f]
        if cm >= 0:
            flux[f] = trans[f] * (p[cp] - p[cm])
        elif mesh.boundary_tag[f] == pm.NATURAL_P:
            flux[f] = trans[f] * (p[cp] - bc.pressure[f])
        else:
            flux[f] = bc.flux[f] * mesh.face_length[f]
    return p, flux
