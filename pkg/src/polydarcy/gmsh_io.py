"""Reader for Gmsh MSH ASCII files (versions 2.2 and 4.1).

Triangles and quadrangles become mesh cells; line elements become
fracture-face constraints grouped by their physical name.  Only the
sections needed for that are interpreted; the rest is skipped.
"""

import numpy as np

from .errors import ParseError
from .mesh import mesh_from_cell_loops

_LINE = 1
_TRI = 2
_QUAD = 3
_POINT = 15
_NODES_PER = {_LINE: 2, _TRI: 3, _QUAD: 4, _POINT: 1}


def _sections(text):
    out = {}
    pos = 0
    while True:
        start = text.find("$", pos)
        if start < 0:
            break
        nl = text.find("\n", start)
        name = text[start + 1:nl].strip()
        if name.startswith("End"):
            raise ParseError(f"unexpected $({name}) marker")
        endmark = f"$End{name}"
        end = text.find(endmark, nl)
        if end < 0:
            raise ParseError(f"truncated ${name} section")
        out[name] = text[nl + 1:end]
        pos = end + len(endmark)
    return out


class _Tokens:
    def __init__(self, body, section):
        self.toks = body.split()
        self.i = 0
        self.section = section

    def take(self, n=1):
        if self.i + n > len(self.toks):
            raise ParseError(f"truncated ${self.section} section")
        out = self.toks[self.i:self.i + n]
        self.i += n
        return out

    def int(self):
        tok = self.take()[0]
        try:
            return int(tok)
        except ValueError as exc:
            raise ParseError(
                f"bad integer {tok!r} in ${self.section}") from exc

    def float(self):
        tok = self.take()[0]
        try:
            return float(tok)
        except ValueError as exc:
            raise ParseError(
                f"bad number {tok!r} in ${self.section}") from exc


def _physical_names(sections):
    names = {}
    if "PhysicalNames" not in sections:
        return names
    tk = _Tokens(sections["PhysicalNames"], "PhysicalNames")
    n = tk.int()
    for _ in range(n):
        dim = tk.int()
        tag = tk.int()
        raw = tk.take()[0]
        while not raw.endswith('"'):
            raw += " " + tk.take()[0]
        names[(dim, tag)] = raw.strip('"')
    return names


def _entity_physicals(sections):
    """Entity -> first physical tag, from the v4 $Entities section."""
    phys = {}
    if "Entities" not in sections:
        return phys
    tk = _Tokens(sections["Entities"], "Entities")
    n_pt, n_cv, n_sf, n_vl = (tk.int() for _ in range(4))
    for _ in range(n_pt):
        tag = tk.int()
        tk.take(3)
        k = tk.int()
        tags = [tk.int() for _ in range(k)]
        phys[(0, tag)] = tags[0] if tags else None
    for dim, count in ((1, n_cv), (2, n_sf), (3, n_vl)):
        for _ in range(count):
            tag = tk.int()
            tk.take(6)
            k = tk.int()
            tags = [tk.int() for _ in range(k)]
            phys[(dim, tag)] = tags[0] if tags else None
            nb = tk.int()
            tk.take(nb)
    return phys


def _parse_v2(sections):
    tk = _Tokens(sections.get("Nodes", ""), "Nodes")
    n = tk.int()
    ids = np.empty(n, dtype=np.int64)
    xy = np.empty((n, 2))
    for k in range(n):
        ids[k] = tk.int()
        xy[k, 0] = tk.float()
        xy[k, 1] = tk.float()
        tk.float()
    tk = _Tokens(sections.get("Elements", ""), "Elements")
    n = tk.int()
    elements = []
    for _ in range(n):
        tk.int()
        etype = tk.int()
        ntags = tk.int()
        tags = [tk.int() for _ in range(ntags)]
        if etype not in _NODES_PER:
            raise ParseError(f"unsupported element type {etype}")
        nodes = [tk.int() for _ in range(_NODES_PER[etype])]
        phys = tags[0] if tags else None
        elements.append((etype, phys, nodes))
    return ids, xy, elements


def _parse_v4(sections):
    ent_phys = _entity_physicals(sections)
    tk = _Tokens(sections.get("Nodes", ""), "Nodes")
    n_blocks = tk.int()
    n_nodes = tk.int()
    tk.take(2)
    ids = np.empty(n_nodes, dtype=np.int64)
    xy = np.empty((n_nodes, 2))
    at = 0
    for _ in range(n_blocks):
        tk.int()
        tk.int()
        parametric = tk.int()
        nb = tk.int()
        if parametric:
            raise ParseError("parametric nodes are not supported")
        blk = [tk.int() for _ in range(nb)]
        for k in range(nb):
            ids[at + k] = blk[k]
            xy[at + k, 0] = tk.float()
            xy[at + k, 1] = tk.float()
            tk.float()
        at += nb
    tk = _Tokens(sections.get("Elements", ""), "Elements")
    n_blocks = tk.int()
    tk.take(3)
    elements = []
    for _ in range(n_blocks):
        edim = tk.int()
        etag = tk.int()
        etype = tk.int()
        nb = tk.int()
        if etype not in _NODES_PER:
            raise ParseError(f"unsupported element type {etype}")
        phys = ent_phys.get((edim, etag))
        for _ in range(nb):
            tk.int()
            nodes = [tk.int() for _ in range(_NODES_PER[etype])]
            elements.append((etype, phys, nodes))
    return ids, xy, elements


def import_gmsh(path):
    """Read a 2D MSH file into a mesh plus fracture-face constraints.

    Returns ``(mesh, constraints)`` where ``constraints`` maps a
    physical-group name to the mesh faces of its line elements.
    Unnamed groups get ``line_<tag>``.
    """
    with open(path) as fh:
        text = fh.read()
    sections = _sections(text)
    if "MeshFormat" not in sections:
        raise ParseError("missing $MeshFormat section")
    fmt = sections["MeshFormat"].split()
    if len(fmt) < 3:
        raise ParseError("truncated $MeshFormat section")
    version, file_type = fmt[0], fmt[1]
    if file_type != "0":
        raise ParseError("binary MSH files are not supported")
    if version.startswith("2."):
        ids, xy, elements = _parse_v2(sections)
    elif version.startswith("4."):
        ids, xy, elements = _parse_v4(sections)
    else:
        raise ParseError(f"unsupported MSH version {version}")

    id_map = {int(i): k for k, i in enumerate(ids)}
    names = _physical_names(sections)
    loops = []
    lines = []
    for etype, phys, nodes in elements:
        try:
            nodes = [id_map[n] for n in nodes]
        except KeyError as exc:
            raise ParseError(f"element references unknown node {exc}")
        if etype in (_TRI, _QUAD):
            loops.append(nodes)
        elif etype == _LINE:
            lines.append((phys, nodes))
    if not loops:
        raise ParseError("no 2D elements found")
    mesh = mesh_from_cell_loops(xy, loops)

    pair_to_face = {}
    for f in range(mesh.n_faces):
        a, b = mesh.face_nodes[f]
        pair_to_face[(min(a, b), max(a, b))] = f
    constraints = {}
    for phys, (a, b) in lines:
        face = pair_to_face.get((min(a, b), max(a, b)))
        if face is None:
            raise ParseError("line element does not match any cell face")
        name = names.get((1, phys), f"line_{phys}")
        constraints.setdefault(name, []).append(int(face))
    return mesh, constraints
