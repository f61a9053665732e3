"""Mesh file formats: VTK legacy ASCII unstructured grids and MEDIT ``.mesh``.

Writers are byte-deterministic: floats use ``%.17g`` and integer fields are
plain decimal.

The base-complex debug dump is a VTK legacy POLYDATA file with
``POINTS`` (all mesh vertices), ``LINES`` (one 2-point line per singular mesh
edge), ``POLYGONS`` (one quad per separating face), and ``CELL_DATA`` with a
``kind`` scalar (1 = singular edge, 2 = separator face) and a ``tag`` scalar
(chain index for lines, base-face id for quads).
"""

import csv
import os

import numpy as np

from .mesh import MeshError, build_mesh

VTK_HEXAHEDRON = 12
_FLOAT = "%.17g"

_MEDIT_SOLIDS = {"tetrahedra", "prisms", "pyramids", "hexahedra"}
_MEDIT_SKIP_COUNTS = {
    "edges": 3, "triangles": 4, "quadrilaterals": 5, "corners": 1, "requiredvertices": 1,
    "ridges": 1, "requirededges": 1, "requiredtriangles": 1, "requiredquadrilaterals": 1,
    "normals": 3, "normalatvertices": 2, "tangents": 3, "tangentatvertices": 2,
}


def _fmt(x):
    return _FLOAT % float(x)


def _format_of(path, fmt=None):
    if fmt:
        return fmt
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".vtk":
        return "vtk"
    if ext == ".mesh":
        return "medit"
    raise MeshError(f"unknown mesh format for {path!r} (expected .vtk or .mesh)")


def read_mesh(path, fmt=None):
    fmt = _format_of(path, fmt)
    with open(path) as fh:
        text = fh.read()
    return read_vtk_text(text) if fmt == "vtk" else read_medit_text(text)


def write_mesh(mesh, path, cell_data=None, fmt=None):
    fmt = _format_of(path, fmt)
    text = vtk_text(mesh, cell_data) if fmt == "vtk" else medit_text(mesh)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# VTK


def vtk_text(mesh, cell_data=None):
    out = ["# vtk DataFile Version 3.0", "hexsimp hexahedral mesh", "ASCII",
           "DATASET UNSTRUCTURED_GRID", f"POINTS {mesh.n_vertices} double"]
    out += [" ".join(_fmt(x) for x in p) for p in mesh.vertices]
    m = mesh.n_hexes
    out.append(f"CELLS {m} {9 * m}")
    out += ["8 " + " ".join(str(int(v)) for v in h) for h in mesh.hexes]
    out.append(f"CELL_TYPES {m}")
    out += [str(VTK_HEXAHEDRON)] * m
    if cell_data:
        out.append(f"CELL_DATA {m}")
        for name in sorted(cell_data):
            values = np.asarray(cell_data[name], dtype=float)
            if values.shape != (m,):
                raise MeshError(f"cell data {name!r} must have one value per hex")
            out += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
            out += [_fmt(x) for x in values]
    return "\n".join(out) + "\n"


def read_vtk_text(text):
    lines = [ln.strip() for ln in text.splitlines()]
    if len(lines) < 4 or not lines[0].lower().startswith("# vtk"):
        raise MeshError("malformed VTK header")
    if lines[2].upper() != "ASCII":
        raise MeshError("only ASCII VTK files are supported")
    if "UNSTRUCTURED_GRID" not in lines[3].upper():
        raise MeshError("expected DATASET UNSTRUCTURED_GRID")
    body = " ".join(lines[4:]).split()
    i = 0
    points = cells = types = None
    while i < len(body):
        key = body[i].upper()
        if key == "POINTS":
            n = int(body[i + 1])
            vals = body[i + 3:i + 3 + 3 * n]
            if len(vals) != 3 * n:
                raise MeshError("malformed POINTS section")
            points = np.array(vals, dtype=float).reshape(n, 3)
            i += 3 + 3 * n
        elif key == "CELLS":
            n, size = int(body[i + 1]), int(body[i + 2])
            vals = np.array(body[i + 3:i + 3 + size], dtype=np.int64)
            if len(vals) != size:
                raise MeshError("malformed CELLS section")
            cells, j = [], 0
            for _ in range(n):
                k = int(vals[j])
                if k != 8:
                    raise MeshError(f"non-hex cell with {k} vertices")
                cells.append(vals[j + 1:j + 9])
                j += k + 1
            i += 3 + size
        elif key == "CELL_TYPES":
            n = int(body[i + 1])
            types = np.array(body[i + 2:i + 2 + n], dtype=np.int64)
            bad = types[types != VTK_HEXAHEDRON]
            if len(bad):
                raise MeshError(f"non-hex cell type {int(bad[0])}")
            i += 2 + n
        elif key in ("CELL_DATA", "POINT_DATA"):
            break
        else:
            raise MeshError(f"unexpected VTK section {body[i]!r}")
    if points is None or cells is None or types is None:
        raise MeshError("VTK file lacks POINTS, CELLS or CELL_TYPES")
    if len(types) != len(cells):
        raise MeshError("CELLS and CELL_TYPES disagree")
    return build_mesh(points, np.array(cells))


# ---------------------------------------------------------------------------
# MEDIT


def medit_text(mesh):
    out = ["MeshVersionFormatted 2", "", "Dimension 3", "", "Vertices", str(mesh.n_vertices)]
    out += [" ".join(_fmt(x) for x in p) + " 0" for p in mesh.vertices]
    out += ["", "Hexahedra", str(mesh.n_hexes)]
    out += [" ".join(str(int(v) + 1) for v in h) + " 0" for h in mesh.hexes]
    out += ["", "End"]
    return "\n".join(out) + "\n"


def read_medit_text(text):
    toks = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            toks.extend(line.split())
    i = 0
    verts = hexes = None
    while i < len(toks):
        key = toks[i].lower()
        if key == "end":
            break
        if key in ("meshversionformatted", "dimension"):
            if key == "dimension" and toks[i + 1] != "3":
                raise MeshError("only 3D MEDIT meshes are supported")
            i += 2
        elif key == "vertices":
            n = int(toks[i + 1])
            vals = toks[i + 2:i + 2 + 4 * n]
            if len(vals) != 4 * n:
                raise MeshError("malformed Vertices section")
            verts = np.array(vals, dtype=float).reshape(n, 4)[:, :3]
            i += 2 + 4 * n
        elif key in _MEDIT_SOLIDS:
            if key != "hexahedra":
                raise MeshError(f"non-hex cell section {toks[i]!r}")
            n = int(toks[i + 1])
            vals = toks[i + 2:i + 2 + 9 * n]
            if len(vals) != 9 * n:
                raise MeshError("malformed Hexahedra section")
            hexes = np.array(vals, dtype=np.int64).reshape(n, 9)[:, :8] - 1
            i += 2 + 9 * n
        elif key in _MEDIT_SKIP_COUNTS:
            n = int(toks[i + 1])
            i += 2 + _MEDIT_SKIP_COUNTS[key] * n
        else:
            raise MeshError(f"unknown MEDIT section {toks[i]!r}")
    if verts is None or hexes is None:
        raise MeshError("MEDIT file lacks Vertices or Hexahedra")
    return build_mesh(verts, hexes)


# ---------------------------------------------------------------------------
# debug dumps and traces


def base_complex_vtk_text(bc):
    mesh = bc.mesh
    lines = [(ci, e) for ci, c in enumerate(bc.singularity.chains) for e in c.edges]
    quads = [int(f) for f in np.flatnonzero(bc.separators)]
    out = ["# vtk DataFile Version 3.0", "hexsimp base complex", "ASCII", "DATASET POLYDATA",
           f"POINTS {mesh.n_vertices} double"]
    out += [" ".join(_fmt(x) for x in p) for p in mesh.vertices]
    out.append(f"LINES {len(lines)} {3 * len(lines)}")
    out += ["2 {} {}".format(*(int(v) for v in mesh.edges[e])) for _, e in lines]
    out.append(f"POLYGONS {len(quads)} {5 * len(quads)}")
    out += ["4 " + " ".join(str(int(v)) for v in mesh.faces[f]) for f in quads]
    n = len(lines) + len(quads)
    out += [f"CELL_DATA {n}", "SCALARS kind int 1", "LOOKUP_TABLE default"]
    out += ["1"] * len(lines) + ["2"] * len(quads)
    out += ["SCALARS tag int 1", "LOOKUP_TABLE default"]
    out += [str(ci) for ci, _ in lines] + [str(bc.face_of.get(f, -1)) for f in quads]
    return "\n".join(out) + "\n"


def write_base_complex(bc, path):
    with open(path, "w", newline="\n") as fh:
        fh.write(base_complex_vtk_text(bc))


TRACE_FIELDS = ("pass", "kind", "id", "outcome", "reason", "n_hexes", "n_components", "energy",
                "hr")


def write_trace(records, path):
    with open(path, "w", newline="") as fh:
        wr = csv.DictWriter(fh, fieldnames=TRACE_FIELDS)
        wr.writeheader()
        for r in records:
            wr.writerow({k: r[k] for k in TRACE_FIELDS})
