"""Writers for VTK legacy files, CSV samples and run reports.

All writers format numbers with ``repr`` so identical inputs produce
byte-identical files.
"""

from .errors import PolydarcyError
from .mesh import cell_loops


def _fmt(v):
    return repr(float(v))


def export_vtk(mesh, cell_fields, path, face_flux=None):
    """Legacy ASCII VTK unstructured grid with polygon cells.

    ``cell_fields`` maps array names to per-cell values.  When
    ``face_flux`` is given, faces are appended as line cells carrying a
    ``flux`` array (polygon entries zero-padded and vice versa).
    """
    for name, arr in cell_fields.items():
        if len(arr) != mesh.n_cells:
            raise PolydarcyError(
                f"field {name!r} has {len(arr)} entries for "
                f"{mesh.n_cells} cells")
    loops = [cell_loops(mesh, c) for c in range(mesh.n_cells)]
    flat = []
    for lp in loops:
        if len(lp) > 1:
            # VTK polygons cannot carry holes; emit the exterior only
            pass
        flat.append(lp[0])
    n_lines = mesh.n_faces if face_flux is not None else 0
    try:
        with open(path, "w") as fh:
            fh.write("# vtk DataFile Version 3.0\n")
            fh.write("polydarcy export\nASCII\nDATASET UNSTRUCTURED_GRID\n")
            fh.write(f"POINTS {mesh.n_nodes} double\n")
            for x, y in mesh.node_xy:
                fh.write(f"{_fmt(x)} {_fmt(y)} 0.0\n")
            size = sum(len(lp) + 1 for lp in flat) + 3 * n_lines
            fh.write(f"CELLS {mesh.n_cells + n_lines} {size}\n")
            for lp in flat:
                fh.write(" ".join([str(len(lp))] + [str(n) for n in lp]))
                fh.write("\n")
            if face_flux is not None:
                for a, b in mesh.face_nodes:
                    fh.write(f"2 {a} {b}\n")
            fh.write(f"CELL_TYPES {mesh.n_cells + n_lines}\n")
            fh.write("".join("7\n" for _ in flat))
            fh.write("".join("3\n" for _ in range(n_lines)))
            fh.write(f"CELL_DATA {mesh.n_cells + n_lines}\n")
            for name in sorted(cell_fields):
                fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                for v in cell_fields[name]:
                    fh.write(_fmt(v) + "\n")
                fh.write("".join("0.0\n" for _ in range(n_lines)))
            if face_flux is not None:
                fh.write("SCALARS flux double 1\nLOOKUP_TABLE default\n")
                fh.write("".join("0.0\n" for _ in range(mesh.n_cells)))
                for v in face_flux:
                    fh.write(_fmt(v) + "\n")
    except OSError as exc:
        raise PolydarcyError(f"cannot write VTK file {path}: {exc}") from exc


def export_fracture_vtk(frac_meshes, fields, path):
    """Fracture grids as polyline cells with per-cell data arrays."""
    try:
        with open(path, "w") as fh:
            fh.write("# vtk DataFile Version 3.0\n")
            fh.write("polydarcy fractures\nASCII\nDATASET UNSTRUCTURED_GRID\n")
            n_pts = sum(sm.n_nodes for sm in frac_meshes)
            n_cells = sum(sm.n_cells for sm in frac_meshes)
            fh.write(f"POINTS {n_pts} double\n")
            for sm in frac_meshes:
                for x, y in sm.node_xy:
                    fh.write(f"{_fmt(x)} {_fmt(y)} 0.0\n")
            fh.write(f"CELLS {n_cells} {3 * n_cells}\n")
            off = 0
            for sm in frac_meshes:
                for k in range(sm.n_cells):
                    fh.write(f"2 {off + k} {off + k + 1}\n")
                off += sm.n_nodes
            fh.write(f"CELL_TYPES {n_cells}\n")
            fh.write("".join("3\n" for _ in range(n_cells)))
            fh.write(f"CELL_DATA {n_cells}\n")
            for name in sorted(fields):
                fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                for arr in fields[name]:
                    for v in arr:
                        fh.write(_fmt(v) + "\n")
    except OSError as exc:
        raise PolydarcyError(f"cannot write VTK file {path}: {exc}") from exc


def write_line_samples(sample, path):
    """CSV with one row per sample: ``param,x,y,p``."""
    try:
        with open(path, "w") as fh:
            fh.write("param,x,y,p\n")
            for t, (x, y), v in zip(sample.params, sample.points,
                                    sample.values):
                fh.write(f"{_fmt(t)},{_fmt(x)},{_fmt(y)},{_fmt(v)}\n")
    except OSError as exc:
        raise PolydarcyError(f"cannot write CSV file {path}: {exc}") from exc


def write_report(entries, path):
    """Flat ``key = value`` report, keys in sorted order."""
    try:
        with open(path, "w") as fh:
            for key in sorted(entries):
                v = entries[key]
                if isinstance(v, float):
                    v = _fmt(v)
                fh.write(f"{key} = {v}\n")
    except OSError as exc:
        raise PolydarcyError(f"cannot write report {path}: {exc}") from exc


def read_report(path):
    """Parse a report written by :func:`write_report`."""
    out = {}
    with open(path) as fh:
        for line in fh:
            if "=" not in line:
                continue
            key, val = line.split("=", 1)
            out[key.strip()] = val.strip()
    return out
