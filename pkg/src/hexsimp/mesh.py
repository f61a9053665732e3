"""Conforming all-hex mesh with derived adjacency and per-cell quality measures.

Cells use VTK hexahedron corner order: corners 0-3 form the bottom quad
(counter-clockwise seen from the top), 4-7 the top quad above them.
"""

from dataclasses import dataclass, field, replace

import numpy as np

# local edges grouped by parametric direction (x, y, z), each oriented low -> high
HEX_EDGES = np.array([
    (0, 1), (3, 2), (4, 5), (7, 6),
    (0, 3), (1, 2), (4, 7), (5, 6),
    (0, 4), (1, 5), (2, 6), (3, 7),
])
EDGE_DIRECTION = np.repeat(np.arange(3), 4)

# outward-oriented local faces; faces (3, 5) are normal to x, (2, 4) to y, (0, 1) to z
HEX_FACES = np.array([
    (0, 3, 2, 1), (4, 5, 6, 7), (0, 1, 5, 4),
    (1, 2, 6, 5), (2, 3, 7, 6), (3, 0, 4, 7),
])
OPPOSITE_FACES = ((5, 3), (2, 4), (0, 1))

# for every corner, the three neighbours forming a right-handed frame
CORNER_FRAMES = np.array([
    (1, 3, 4), (2, 0, 5), (3, 1, 6), (0, 2, 7),
    (7, 5, 0), (4, 6, 1), (5, 7, 2), (6, 4, 3),
])

# unit-cube lattice position of each corner
CORNER_LATTICE = np.array([
    (0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0),
    (0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1),
])

# two mirror five-tet decompositions; together they anchor a tet at every corner
FIVE_TETS = np.array([
    [(0, 1, 3, 4), (2, 3, 1, 6), (5, 4, 6, 1), (7, 6, 4, 3), (1, 3, 4, 6)],
    [(1, 2, 0, 5), (3, 0, 2, 7), (4, 7, 5, 0), (6, 5, 7, 2), (0, 2, 7, 5)],
])

_DEGENERATE_TOL = 1e-14


class MeshError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class HexMesh:
    """Immutable hex mesh. Build with :func:`build_mesh`."""

    vertices: np.ndarray
    hexes: np.ndarray
    edges: np.ndarray
    faces: np.ndarray
    hex_edges: np.ndarray
    hex_faces: np.ndarray
    face_hexes: np.ndarray
    face_edges: np.ndarray
    edge_hexes: tuple
    edge_faces: tuple
    vertex_hexes: tuple
    vertex_neighbors: tuple
    boundary_face: np.ndarray
    boundary_edge: np.ndarray
    boundary_vertex: np.ndarray
    feature_edge: np.ndarray
    feature_vertex: np.ndarray
    revision: int = 0
    _edge_index: dict = field(default=None, repr=False)
    _face_index: dict = field(default=None, repr=False)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_hexes(self):
        return len(self.hexes)

    def edge_id(self, a, b):
        """Id of the edge joining vertices ``a`` and ``b`` (KeyError if absent)."""
        return self._edge_index[(a, b) if a < b else (b, a)]

    def find_edge(self, a, b):
        return self._edge_index.get((a, b) if a < b else (b, a))

    def face_id(self, quad):
        return self._face_index[tuple(sorted(int(v) for v in quad))]

    def find_face(self, quad):
        return self._face_index.get(tuple(sorted(int(v) for v in quad)))

    def with_positions(self, vertices):
        """Same topology, new positions; bumps the revision."""
        v = np.array(vertices, dtype=float)
        v.setflags(write=False)
        return replace(self, vertices=v, revision=self.revision + 1)

    def with_features(self, feature_edge, feature_vertex):
        fe = np.asarray(feature_edge, dtype=bool).copy()
        fv = np.asarray(feature_vertex, dtype=bool).copy()
        fe.setflags(write=False)
        fv.setflags(write=False)
        return replace(self, feature_edge=fe, feature_vertex=fv)


def build_mesh(vertices, hexes, revision=0):
    vertices = np.array(vertices, dtype=float).reshape(-1, 3)
    hexes = np.array(hexes, dtype=np.int64).reshape(-1, 8)
    if len(hexes) == 0:
        raise MeshError("empty mesh")
    nv = len(vertices)
    if hexes.min() < 0 or hexes.max() >= nv:
        raise MeshError("vertex index out of range")
    keys = np.sort(hexes, axis=1)
    if len(np.unique(keys, axis=0)) != len(keys):
        raise MeshError("duplicate hex")

    m = len(hexes)
    all_edges = np.sort(hexes[:, HEX_EDGES].reshape(-1, 2), axis=1)
    edges, edge_inv = np.unique(all_edges, axis=0, return_inverse=True)
    edge_inv = edge_inv.reshape(m, 12)

    all_faces = hexes[:, HEX_FACES].reshape(-1, 4)
    face_keys = np.sort(all_faces, axis=1)
    uniq_keys, first, face_inv = np.unique(face_keys, axis=0, return_index=True,
                                           return_inverse=True)
    faces = all_faces[first]
    face_inv = face_inv.reshape(m, 6)
    nf = len(faces)

    face_hexes = np.full((nf, 2), -1, dtype=np.int64)
    counts = np.zeros(nf, dtype=np.int64)
    overfull = []
    for h in range(m):
        for f in face_inv[h]:
            if counts[f] < 2:
                face_hexes[f, counts[f]] = h
            else:
                overfull.append(f)
            counts[f] += 1
    boundary_face = counts == 1

    edge_index = {(int(a), int(b)): i for i, (a, b) in enumerate(edges)}
    face_index = {tuple(int(x) for x in k): i for i, k in enumerate(uniq_keys)}

    loops = np.stack([faces, np.roll(faces, -1, axis=1)], axis=2)
    loops = np.sort(loops, axis=2)
    face_edges = np.array([[edge_index[(int(a), int(b))] for a, b in quad] for quad in loops],
                          dtype=np.int64).reshape(-1, 4)

    ne = len(edges)
    edge_hexes = [[] for _ in range(ne)]
    for h in range(m):
        for e in edge_inv[h]:
            edge_hexes[e].append(h)
    edge_faces = [[] for _ in range(ne)]
    for f in range(nf):
        for e in face_edges[f]:
            edge_faces[e].append(f)
    vertex_hexes = [[] for _ in range(nv)]
    for h in range(m):
        for v in hexes[h]:
            vertex_hexes[v].append(h)
    vertex_neighbors = [[] for _ in range(nv)]
    for a, b in edges:
        vertex_neighbors[a].append(int(b))
        vertex_neighbors[b].append(int(a))

    boundary_edge = np.zeros(ne, dtype=bool)
    boundary_edge[np.unique(face_edges[boundary_face])] = True
    boundary_vertex = np.zeros(nv, dtype=bool)
    boundary_vertex[np.unique(faces[boundary_face])] = True

    arrays = dict(
        vertices=vertices, hexes=hexes, edges=edges, faces=faces,
        hex_edges=edge_inv, hex_faces=face_inv, face_hexes=face_hexes,
        face_edges=face_edges, boundary_face=boundary_face,
        boundary_edge=boundary_edge, boundary_vertex=boundary_vertex,
        feature_edge=np.zeros(ne, dtype=bool), feature_vertex=np.zeros(nv, dtype=bool),
    )
    for a in arrays.values():
        a.setflags(write=False)
    mesh = HexMesh(
        edge_hexes=tuple(tuple(x) for x in edge_hexes),
        edge_faces=tuple(tuple(x) for x in edge_faces),
        vertex_hexes=tuple(tuple(x) for x in vertex_hexes),
        vertex_neighbors=tuple(tuple(x) for x in vertex_neighbors),
        revision=revision, _edge_index=edge_index, _face_index=face_index,
        **arrays,
    )
    object.__setattr__(mesh, "_overfull_faces", tuple(sorted(set(overfull))))
    return mesh


@dataclass
class ValidationReport:
    is_manifold: bool
    doublets: list
    inverted_cells: list
    non_conforming_faces: list
    non_manifold_edges: list = field(default_factory=list)

    @property
    def clean(self):
        return (self.is_manifold and not self.doublets and not self.inverted_cells
                and not self.non_conforming_faces)


def validate(mesh):
    overfull = list(getattr(mesh, "_overfull_faces", ()))
    non_manifold_edges = []
    for e in np.flatnonzero(mesh.boundary_edge):
        nb = sum(1 for f in mesh.edge_faces[e] if mesh.boundary_face[f])
        if nb != 2:
            non_manifold_edges.append(int(e))
    degenerate = [int(f) for f in range(len(mesh.faces)) if len(set(mesh.faces[f])) < 4]

    doublets = []
    shared = {}
    for f in np.flatnonzero(~mesh.boundary_face):
        a, b = sorted(int(h) for h in mesh.face_hexes[f])
        shared[(a, b)] = shared.get((a, b), 0) + 1
    doublets = sorted(pair for pair, n in shared.items() if n >= 2)

    sj = scaled_jacobians(mesh)
    inverted = [int(h) for h in np.flatnonzero(sj <= 0)]
    return ValidationReport(
        is_manifold=not overfull and not non_manifold_edges,
        doublets=doublets,
        inverted_cells=inverted,
        non_conforming_faces=sorted(set(overfull) | set(degenerate)),
        non_manifold_edges=non_manifold_edges,
    )


def edge_valence(mesh, edge):
    if not 0 <= edge < len(mesh.edges):
        raise IndexError(f"bad edge id {edge}")
    return len(mesh.edge_hexes[edge])


def edge_valences(mesh):
    return np.array([len(h) for h in mesh.edge_hexes], dtype=np.int64)


def is_regular_edge(mesh, edge):
    v = edge_valence(mesh, edge)
    if mesh.boundary_edge[edge]:
        return v == 2 or bool(mesh.feature_edge[edge])
    return v == 4


def is_regular_vertex(mesh, vertex):
    if not 0 <= vertex < mesh.n_vertices:
        raise IndexError(f"bad vertex id {vertex}")
    v = len(mesh.vertex_hexes[vertex])
    if mesh.boundary_vertex[vertex]:
        return v == 4 or bool(mesh.feature_vertex[vertex])
    return v == 8


def irregular_edges(mesh):
    """Edges whose valence differs from the regular one, features included."""
    val = edge_valences(mesh)
    return np.where(mesh.boundary_edge, val != 2, val != 4)


def singular_edges(mesh):
    """Irregular edges that are not exempted as feature edges."""
    return irregular_edges(mesh) & ~(mesh.boundary_edge & mesh.feature_edge)


def corner_jacobians(points):
    """Scaled corner Jacobians of hexes given as an (m, 8, 3) array.

    Returns (values, degenerate) where degenerate flags hexes with a zero-length
    corner edge; their values are 0.
    """
    points = np.asarray(points, dtype=float)
    p0 = points[:, :, None, :]
    frame = points[:, CORNER_FRAMES, :] - p0
    lengths = np.linalg.norm(frame, axis=3)
    det = np.linalg.det(frame)
    denom = lengths.prod(axis=2)
    degenerate = (denom <= _DEGENERATE_TOL).any(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        sj = np.where(denom > _DEGENERATE_TOL, det / np.where(denom > 0, denom, 1.0), 0.0)
    sj[degenerate] = 0.0
    return sj, degenerate


def scaled_jacobians(mesh, hexes=None):
    ids = np.arange(mesh.n_hexes) if hexes is None else np.asarray(hexes)
    sj, _ = corner_jacobians(mesh.vertices[mesh.hexes[ids]])
    return sj.min(axis=1)


def scaled_jacobian(mesh, hex_id):
    if not 0 <= hex_id < mesh.n_hexes:
        raise IndexError(f"bad hex id {hex_id}")
    sj, degenerate = corner_jacobians(mesh.vertices[mesh.hexes[[hex_id]]])
    return float(sj.min()), bool(degenerate[0])


def mesh_jacobian_stats(mesh):
    """(MSJ, ASJ, Std) of the per-hex scaled Jacobians."""
    sj = scaled_jacobians(mesh)
    return float(sj.min()), float(sj.mean()), float(sj.std())


def shape_metrics(points):
    """Algebraic shape metric of hexes given as an (m, 8, 3) array.

    ``24 / sum_k tr(A_k^T A_k) / det(A_k)^(2/3)`` over the eight corner
    matrices; 0 when any corner matrix is non-positive.
    """
    points = np.asarray(points, dtype=float)
    frame = points[:, CORNER_FRAMES, :] - points[:, :, None, :]
    A = np.swapaxes(frame, 2, 3)
    det = np.linalg.det(A)
    trace = (A ** 2).sum(axis=(2, 3))
    scale = np.abs(trace).max(axis=1, keepdims=True)
    bad = (det <= 1e-12 * np.maximum(scale, 1e-300) ** 1.5).any(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = trace / np.cbrt(np.where(det > 0, det, 1.0)) ** 2
    out = 24.0 / terms.sum(axis=1)
    out[bad] = 0.0
    return np.clip(out, 0.0, 1.0)


def f_shape(mesh, hex_id):
    if not 0 <= hex_id < mesh.n_hexes:
        raise IndexError(f"bad hex id {hex_id}")
    return float(shape_metrics(mesh.vertices[mesh.hexes[[hex_id]]])[0])


def hex_volumes(points):
    """Volumes of hexes (m, 8, 3), averaged over both five-tet decompositions."""
    points = np.asarray(points, dtype=float)
    total = np.zeros(len(points))
    for tets in FIVE_TETS:
        for t in tets:
            a, b, c, d = (points[:, i] for i in t)
            total += np.einsum("ij,ij->i", np.cross(b - a, c - a), d - a) / 6.0
    return total / 2.0


def face_normals(mesh, face_ids):
    q = mesh.vertices[mesh.faces[face_ids]]
    n = np.cross(q[:, 2] - q[:, 0], q[:, 3] - q[:, 1])
    return n / np.maximum(np.linalg.norm(n, axis=1, keepdims=True), 1e-300)


def outward_boundary_quads(mesh):
    """Boundary quads as vertex loops oriented with outward normals."""
    quads = []
    for f in np.flatnonzero(mesh.boundary_face):
        h = mesh.face_hexes[f, 0]
        k = int(np.flatnonzero(mesh.hex_faces[h] == f)[0])
        quads.append(mesh.hexes[h][HEX_FACES[k]])
    return np.array(quads, dtype=np.int64).reshape(-1, 4)


def detect_features(mesh, angle_threshold=60.0):
    """Tag sharp boundary edges and the vertices where feature chains meet or turn.

    Returns ``(feature_edge, feature_vertex)`` boolean arrays.
    """
    if angle_threshold <= 5.0:
        raise MeshError("degenerate threshold: feature angle must exceed 5 degrees")
    quads = outward_boundary_quads(mesh)
    bfaces = np.flatnonzero(mesh.boundary_face)
    q = mesh.vertices[quads]
    normals = np.cross(q[:, 2] - q[:, 0], q[:, 3] - q[:, 1])
    normals /= np.maximum(np.linalg.norm(normals, axis=1, keepdims=True), 1e-300)
    normal_of = dict(zip(bfaces.tolist(), normals))
    cos_t = np.cos(np.radians(angle_threshold))

    feature_edge = np.zeros(len(mesh.edges), dtype=bool)
    for e in np.flatnonzero(mesh.boundary_edge):
        bf = [f for f in mesh.edge_faces[e] if mesh.boundary_face[f]]
        if len(bf) != 2:
            feature_edge[e] = True
            continue
        if np.dot(normal_of[bf[0]], normal_of[bf[1]]) < cos_t:
            feature_edge[e] = True

    feature_vertex = np.zeros(mesh.n_vertices, dtype=bool)
    incident = [[] for _ in range(mesh.n_vertices)]
    for e in np.flatnonzero(feature_edge):
        a, b = mesh.edges[e]
        incident[a].append(b)
        incident[b].append(a)
    for v, nbrs in enumerate(incident):
        if not nbrs:
            continue
        if len(nbrs) != 2:
            feature_vertex[v] = True
            continue
        d0 = mesh.vertices[nbrs[0]] - mesh.vertices[v]
        d1 = mesh.vertices[v] - mesh.vertices[nbrs[1]]
        c = np.dot(d0, d1) / max(np.linalg.norm(d0) * np.linalg.norm(d1), 1e-300)
        if c < cos_t:
            feature_vertex[v] = True
    return feature_edge, feature_vertex


def with_detected_features(mesh, angle_threshold=60.0):
    return mesh.with_features(*detect_features(mesh, angle_threshold))


def mean_edge_length(mesh):
    d = mesh.vertices[mesh.edges[:, 0]] - mesh.vertices[mesh.edges[:, 1]]
    return float(np.linalg.norm(d, axis=1).mean())


def bbox_diagonal(points):
    points = np.asarray(points)
    return float(np.linalg.norm(points.max(axis=0) - points.min(axis=0)))


def carry_features(old, new, vertex_map, extra_edges=()):
    """Transfer feature tags from ``old`` to ``new`` through ``vertex_map`` (-1 = gone)."""
    vertex_map = np.asarray(vertex_map)
    fv = np.zeros(new.n_vertices, dtype=bool)
    for v in np.flatnonzero(old.feature_vertex):
        if vertex_map[v] >= 0:
            fv[vertex_map[v]] = True
    fe = np.zeros(len(new.edges), dtype=bool)
    pairs = [tuple(vertex_map[old.edges[e]]) for e in np.flatnonzero(old.feature_edge)]
    for a, b in list(pairs) + list(extra_edges):
        if a < 0 or b < 0 or a == b:
            continue
        i = new.find_edge(int(a), int(b))
        if i is not None and new.boundary_edge[i]:
            fe[i] = True
    return new.with_features(fe, fv)


def compact(vertices, hexes, revision=0):
    """Drop unreferenced vertices; returns (mesh, old -> new vertex map)."""
    hexes = np.asarray(hexes, dtype=np.int64).reshape(-1, 8)
    used = np.unique(hexes)
    vmap = -np.ones(len(vertices), dtype=np.int64)
    vmap[used] = np.arange(len(used))
    return build_mesh(np.asarray(vertices)[used], vmap[hexes], revision), vmap
