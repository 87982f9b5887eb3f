"""Per-cell matrices of the lowest-order mixed virtual element method.

Velocity degrees of freedom are integrated normal fluxes, one per face,
oriented outward in the local matrices (global orientation signs are
applied at assembly).  The velocity space on a cell contains the fields
with constant divergence, zero curl and face-wise constant normal trace;
its computable subspace consists of the constant vector fields, onto
which the energy projection reduces to the cell average.

The local bilinear form splits into a consistency part (exact on the
projected subspace) and a stabilization acting on the complement, scaled
by the spectral norm of the inverse permeability.
"""

import numpy as np

from .errors import MeshError


def cell_face_data(mesh, c):
    """Outward-oriented face lengths, unit normals and midpoints of a cell."""
    f_ids, signs = mesh.cell_faces(c)
    normals = mesh.face_normal[f_ids] * signs[:, None].astype(float)
    lengths = mesh.face_length[f_ids]
    mids = mesh.face_midpoints()[f_ids]
    return f_ids, signs, lengths, normals, mids


def local_projection(lengths, normals, midpoints, centroid, area):
    """Projection of the flux-dof basis onto constant vector fields.

    Returns ``(pi_vec, pi_dof)``: ``pi_vec`` is the 2 x k map from dofs to
    the projected constant field, ``pi_dof`` the induced k x k idempotent
    map in dof space.
    """
    if area <= 0:
        raise MeshError("degenerate cell in local projection")
    d = midpoints - centroid
    pi_vec = d.T / area
    pi_dof = (lengths[:, None] * normals) @ pi_vec
    return pi_vec, pi_dof


def local_consistency(lengths, normals, midpoints, centroid, area, K):
    """Consistency matrix: energy of the projected basis pair.

    Exact because projected fields are constant on the cell.
    """
    K = np.asarray(K, float)
    H = np.linalg.inv(K)
    pi_vec, _ = local_projection(lengths, normals, midpoints, centroid, area)
    return area * pi_vec.T @ H @ pi_vec


def local_stabilization(lengths, normals, midpoints, centroid, area, K,
                        weight=None):
    """Stabilization matrix, vanishing on dofs of projected fields.

    ``weight`` defaults to the spectral norm of the inverse permeability;
    a 1D caller passes the diameter-scaled variant instead.
    """
    K = np.asarray(K, float)
    if weight is None:
        weight = np.linalg.norm(np.linalg.inv(K), 2)
    _, pi_dof = local_projection(lengths, normals, midpoints, centroid, area)
    t = np.eye(pi_dof.shape[0]) - pi_dof
    return weight * t.T @ t


def local_matrices(lengths, normals, midpoints, centroid, area, K):
    """Consistency and stabilization of one bulk cell (outward dofs)."""
    K = np.asarray(K, float)
    H = np.linalg.inv(K)
    pi_vec, pi_dof = local_projection(lengths, normals, midpoints, centroid,
                                      area)
    a_cons = area * pi_vec.T @ H @ pi_vec
    t = np.eye(pi_dof.shape[0]) - pi_dof
    s = np.linalg.norm(H, 2) * t.T @ t
    return a_cons, s


def local_divergence(signs, factor=1.0):
    """Divergence row of a cell for integrated-flux dofs.

    The integral of the divergence of the i-th basis function over the
    cell is its orientation sign, so the row is ``-sign`` (times an
    optional scale factor for 1D cells).
    """
    return -np.asarray(signs, float) * factor

def local_matrices_1d(length, inv_k_eff):
    """Consistency and stabilization of a 1D fracture cell.

    Two point-flux dofs oriented outward.  ``inv_k_eff`` is the inverse of
    the effective tangential permeability (aperture times permeability).
    The stabilization carries the cell diameter as scale factor.
    """
    if length <= 0:
        raise MeshError("degenerate 1d cell")
    # outward dofs d = (-v(a), +v(b)); projection = mean value (d_b - d_a)/2
    pi_dof = 0.5 * np.array([[1.0, -1.0], [-1.0, 1.0]])
    a_cons = 0.25 * length * inv_k_eff * np.array([[1.0, -1.0], [-1.0, 1.0]])
    t = np.eye(2) - pi_dof
    s = length * inv_k_eff * t.T @ t
    return a_cons, s


def stabilization_index(a_cons, s):
    """Share of the stabilization in the local velocity matrix.

    Frobenius norms; value in [0, 1].
    """
    na = np.linalg.norm(a_cons, "fro")
    ns = np.linalg.norm(s, "fro")
    if na + ns == 0:
        raise ValueError("both local matrices vanish")
    return float(ns / (ns + na))


def stabilization_indices(mesh, K_cells):
    """Stabilization index of every cell of a bulk mesh."""
    out = np.empty(mesh.n_cells)
    for c in range(mesh.n_cells):
        _, _, lengths, normals, mids = cell_face_data(mesh, c)
        a_cons, s = local_matrices(lengths, normals, mids,
                                   mesh.cell_centroid[c], mesh.cell_area[c],
                                   _cell_tensor(K_cells, c))
        out[c] = stabilization_index(a_cons, s)
    return out


def _cell_tensor(K_cells, c):
    """Permeability of cell ``c`` as a 2x2 tensor."""
    K = K_cells[c] if not np.isscalar(K_cells) else K_cells
    K = np.asarray(K, float)
    if K.ndim == 0:
        K = float(K) * np.eye(2)
    if K.shape != (2, 2):
        raise ValueError("cell permeability must be scalar or 2x2")
    if not np.allclose(K, K.T, atol=1e-14 * max(1.0, abs(K).max())):
        raise ValueError("permeability tensor must be symmetric")
    if np.linalg.eigvalsh(K).min() <= 0:
        raise ValueError("permeability tensor must be positive definite")
    return K
