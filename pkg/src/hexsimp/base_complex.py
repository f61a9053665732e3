"""Singularity structure, base-complex segmentation, sheets and chords.

The segmentation traces separating surfaces from every irregular edge through
regular interior edges, flood-fills the hexes between them, and then checks
every component for an integer ``a x b x c`` lattice.  Components that fail the
check are cut (by tracing an extra surface) until all of them pass.
"""

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .mesh import CORNER_FRAMES, CORNER_LATTICE, HEX_FACES, edge_valences, irregular_edges, \
    singular_edges

_MAX_SECONDARY_ROUNDS = 64


@dataclass
class SingularChain:
    edges: tuple
    vertices: tuple
    valence: int
    boundary: bool
    closed: bool


@dataclass
class SingularityStructure:
    chains: list
    singular_vertices: list

    @property
    def edge_set(self):
        return {e for c in self.chains for e in c.edges}


def _chain_walk(mesh, group):
    """Split a set of edges into maximal chains through degree-2 vertices."""
    inc = {}
    for e in group:
        for v in mesh.edges[e]:
            inc.setdefault(int(v), []).append(e)
    seen = set()
    chains = []
    for e0 in sorted(group):
        if e0 in seen:
            continue
        # walk both directions from e0
        parts = []
        closed = False
        for start in mesh.edges[e0]:
            path = []
            v = int(start)
            prev = e0
            while len(inc[v]) == 2:
                nxt = inc[v][0] if inc[v][1] == prev else inc[v][1]
                if nxt == e0:
                    closed = True
                    break
                path.append(nxt)
                a, b = mesh.edges[nxt]
                v = int(b) if int(a) == v else int(a)
                prev = nxt
            parts.append(path)
            if closed:
                break
        if closed:
            edges = [e0] + parts[0]
        else:
            edges = parts[1][::-1] + [e0] + parts[0]
        seen.update(edges)
        verts = _ordered_vertices(mesh, edges)
        chains.append((edges, verts, closed))
    return chains


def _ordered_vertices(mesh, edges):
    if len(edges) == 1:
        return tuple(int(v) for v in mesh.edges[edges[0]])
    a, b = (int(v) for v in mesh.edges[edges[0]])
    c, d = (int(v) for v in mesh.edges[edges[1]])
    first = a if b in (c, d) else b
    verts = [first]
    for e in edges:
        x, y = (int(v) for v in mesh.edges[e])
        verts.append(y if x == verts[-1] else x)
    return tuple(verts)


def extract_singularity(mesh):
    sing = singular_edges(mesh)
    val = edge_valences(mesh)
    groups = {}
    for e in np.flatnonzero(sing):
        groups.setdefault((int(val[e]), bool(mesh.boundary_edge[e])), []).append(int(e))
    chains = []
    for (v, bdy), group in groups.items():
        for edges, verts, closed in _chain_walk(mesh, group):
            chains.append(SingularChain(tuple(edges), verts, v, bdy, closed))
    chains.sort(key=lambda c: min(c.edges))
    svert = sorted({c.vertices[0] for c in chains if not c.closed}
                   | {c.vertices[-1] for c in chains if not c.closed})
    return SingularityStructure(chains, svert)


# ---------------------------------------------------------------------------
# segmentation


def _trace_surfaces(mesh, seeds, stop_edges, marked):
    """Mark faces reachable from ``seeds`` by crossing regular interior edges."""
    stack = [int(f) for f in seeds]
    while stack:
        f = stack.pop()
        if marked[f] or mesh.boundary_face[f]:
            continue
        marked[f] = True
        hf = set(int(h) for h in mesh.face_hexes[f])
        for e in mesh.face_edges[f]:
            if stop_edges[e] or mesh.boundary_edge[e]:
                continue
            for g in mesh.edge_faces[e]:
                if g != f and not marked[g] and not (hf & set(int(h) for h in mesh.face_hexes[g])):
                    stack.append(int(g))
    return marked


def _flood(mesh, separators):
    inner = np.flatnonzero(~mesh.boundary_face & ~separators)
    a = mesh.face_hexes[inner, 0]
    b = mesh.face_hexes[inner, 1]
    n = mesh.n_hexes
    g = coo_matrix((np.ones(len(inner)), (a, b)), shape=(n, n))
    _, labels = connected_components(g, directed=False)
    return labels


def _other_corner(hexverts, u, face_set):
    """Vertex of a hex adjacent to ``u`` along the edge leaving ``face_set``."""
    k = int(np.flatnonzero(hexverts == u)[0])
    for j in CORNER_FRAMES[k]:
        if int(hexverts[j]) not in face_set:
            return int(hexverts[j])
    raise RuntimeError("face does not belong to hex")


def _lattice(mesh, hexes, separators):
    """Try to assign integer lattice coordinates to a component.

    Returns (coords, None) on success or (None, cut_faces) describing a set
    of faces along which the component must be split.
    """
    members = set(int(h) for h in hexes)
    start = min(members)
    coords = {int(v): tuple(int(x) for x in c) for v, c in zip(mesh.hexes[start], CORNER_LATTICE)}
    queue = deque([start])
    visited = {start}
    while queue:
        h = queue.popleft()
        hv = mesh.hexes[h]
        for k in range(6):
            f = int(mesh.hex_faces[h, k])
            if mesh.boundary_face[f] or separators[f]:
                continue
            h2 = int(mesh.face_hexes[f, 0] if mesh.face_hexes[f, 1] == h else mesh.face_hexes[f, 1])
            if h2 not in members:
                continue
            fv = set(int(v) for v in hv[HEX_FACES[k]])
            h2v = mesh.hexes[h2]
            for u in fv:
                w = _other_corner(hv, u, fv)
                x = _other_corner(h2v, u, fv)
                cu = np.array(coords[u])
                cx = tuple(int(t) for t in 2 * cu - np.array(coords[w]))
                if x in coords and coords[x] != cx:
                    return None, [f]
                coords[x] = cx
            if h2 not in visited:
                visited.add(h2)
                queue.append(h2)

    pts = np.array(list(coords.values()))
    lo = pts.min(axis=0)
    coords = {v: tuple(int(t) for t in np.array(c) - lo) for v, c in coords.items()}
    ext = pts.max(axis=0) - lo
    if len(set(coords.values())) != len(coords):
        # two vertices share a lattice point: the block folds onto itself
        seen = {}
        for v, c in coords.items():
            if c in seen:
                bad = {v, seen[c]}
                faces = [int(f) for h in members for f in mesh.hex_faces[h]
                         if not mesh.boundary_face[f] and not separators[f]
                         and bad & set(int(x) for x in mesh.faces[f])]
                return None, faces[:1]
            seen[c] = v
    hex_coords = {h: tuple(min(coords[int(v)][i] for v in mesh.hexes[h]) for i in range(3))
                  for h in members}
    if len(members) == int(np.prod(ext)) and len(coords) == int(np.prod(ext + 1)):
        return (coords, hex_coords, tuple(int(e) for e in ext)), None

    # not a full box: cut where the cross-section changes
    for ax in range(3):
        layers = {}
        for h, c in hex_coords.items():
            layers.setdefault(c[ax], set()).add(tuple(c[i] for i in range(3) if i != ax))
        for t in range(1, int(ext[ax])):
            if layers.get(t - 1) != layers.get(t):
                cut = []
                for h in members:
                    if hex_coords[h][ax] != t:
                        continue
                    for k in range(6):
                        f = int(mesh.hex_faces[h, k])
                        if mesh.boundary_face[f] or separators[f]:
                            continue
                        o = int(mesh.face_hexes[f, 0] if mesh.face_hexes[f, 1] == h
                                else mesh.face_hexes[f, 1])
                        if o in members and hex_coords[o][ax] == t - 1:
                            cut.append(f)
                return None, cut
    # cross-sections agree layer by layer yet the block has holes in every direction
    return None, [int(f) for h in sorted(members) for f in mesh.hex_faces[h]
                  if not mesh.boundary_face[f] and not separators[f]][:1]


@dataclass
class Component:
    id: int
    hexes: np.ndarray
    extents: tuple
    grid: np.ndarray          # (a+1, b+1, c+1) vertex ids
    coords: dict              # vertex -> (i, j, k)
    hex_coords: dict          # hex -> (i, j, k)

    def line(self, axis, other):
        """Vertex ids along ``axis`` with the other two lattice coordinates fixed.

        ``other`` maps axis -> coordinate for the two remaining axes.
        """
        idx = [slice(None)] * 3
        for ax, c in other.items():
            idx[ax] = c
        return [int(v) for v in self.grid[tuple(idx)]]

    def side_faces(self, mesh, axis, coord):
        """Mesh faces on the block side normal to ``axis`` at lattice ``coord``."""
        others = [a for a in range(3) if a != axis]
        out = []
        for i in range(self.extents[others[0]]):
            for j in range(self.extents[others[1]]):
                quad = []
                for di, dj in ((0, 0), (1, 0), (1, 1), (0, 1)):
                    c = [0, 0, 0]
                    c[axis] = coord
                    c[others[0]] = i + di
                    c[others[1]] = j + dj
                    quad.append(self.grid[tuple(c)])
                out.append(mesh.face_id(quad))
        return out

    @property
    def corners(self):
        a, b, c = self.extents
        return [int(self.grid[i, j, k]) for i in (0, a) for j in (0, b) for k in (0, c)]


@dataclass
class BaseEdge:
    id: int
    edges: tuple
    vertices: tuple
    valence: int
    boundary: bool
    singular: bool

    @property
    def regular_valence(self):
        return 3 if self.boundary else 4


@dataclass
class BaseFace:
    id: int
    faces: tuple
    boundary: bool


@dataclass
class BaseComplex:
    mesh: object
    components: list
    vertices: list
    edges: list
    faces: list
    edge_of: dict                 # mesh edge -> base edge id
    face_of: dict                 # mesh face -> base face id
    component_of: np.ndarray      # hex -> component id
    singularity: SingularityStructure
    separators: np.ndarray
    secondary_cuts: int = 0
    block_edges: dict = field(default_factory=dict)   # (comp, axis, o1, o2) -> [base edge ids]
    block_faces: dict = field(default_factory=dict)   # (comp, axis, side) -> [base face ids]

    @property
    def n_components(self):
        return len(self.components)

    def regular_valence(self, be):
        return self.edges[be].regular_valence


def extract_base_complex(mesh, singularity=None):
    """Segment the mesh into grid blocks and build B = (B_V, B_E, B_F, B_C)."""
    if getattr(mesh, "_overfull_faces", ()):
        raise ValueError("non-manifold input: faces shared by more than two hexes")
    singularity = extract_singularity(mesh) if singularity is None else singularity
    irregular = irregular_edges(mesh)
    seeds = [f for e in np.flatnonzero(irregular) for f in mesh.edge_faces[e]
             if not mesh.boundary_face[f]]
    separators = _trace_surfaces(mesh, seeds, irregular, np.zeros(len(mesh.faces), dtype=bool))

    cuts = 0
    for _ in range(_MAX_SECONDARY_ROUNDS):
        labels = _flood(mesh, separators)
        blocks = []
        pending = []
        for lab in range(labels.max() + 1):
            hexes = np.flatnonzero(labels == lab)
            res, cut = _lattice(mesh, hexes, separators)
            if res is None:
                pending.extend(cut)
            else:
                blocks.append((hexes, res))
        if not pending:
            break
        cuts += 1
        separators = _trace_surfaces(mesh, pending, irregular, separators)
    else:
        raise RuntimeError("secondary detection did not converge")

    blocks.sort(key=lambda b: int(b[0].min()))
    components = []
    component_of = np.empty(mesh.n_hexes, dtype=np.int64)
    for cid, (hexes, (coords, hex_coords, ext)) in enumerate(blocks):
        grid = np.empty(tuple(e + 1 for e in ext), dtype=np.int64)
        for v, c in coords.items():
            grid[c] = v
        components.append(Component(cid, np.sort(hexes), ext, grid, coords, hex_coords))
        component_of[hexes] = cid

    bverts = sorted({v for c in components for v in c.corners})
    is_bv = np.zeros(mesh.n_vertices, dtype=bool)
    is_bv[bverts] = True
    sing = singular_edges(mesh)
    val = edge_valences(mesh)

    edges_by_key = {}
    block_edges = {}
    for comp in components:
        for axis in range(3):
            o = [a for a in range(3) if a != axis]
            for c1 in (0, comp.extents[o[0]]):
                for c2 in (0, comp.extents[o[1]]):
                    line = comp.line(axis, {o[0]: c1, o[1]: c2})
                    ids = []
                    seg = [line[0]]
                    for v in line[1:]:
                        seg.append(v)
                        if is_bv[v]:
                            medges = tuple(mesh.edge_id(a, b) for a, b in zip(seg[:-1], seg[1:]))
                            key = min(medges)
                            if key not in edges_by_key:
                                edges_by_key[key] = (medges, tuple(seg))
                            ids.append(key)
                            seg = [v]
                    block_edges[(comp.id, axis, c1, c2)] = ids
    keys = sorted(edges_by_key)
    remap = {k: i for i, k in enumerate(keys)}
    edges = []
    edge_of = {}
    for k in keys:
        medges, verts = edges_by_key[k]
        be = BaseEdge(remap[k], medges, verts, int(val[medges[0]]),
                      bool(mesh.boundary_edge[list(medges)].all()),
                      bool(sing[list(medges)].any()))
        edges.append(be)
        for e in medges:
            edge_of[e] = be.id
    block_edges = {k: [remap[x] for x in v] for k, v in block_edges.items()}

    faces_by_key = {}
    block_faces = {}
    for comp in components:
        for axis in range(3):
            for side in (0, comp.extents[axis]):
                fs = tuple(sorted(comp.side_faces(mesh, axis, side)))
                faces_by_key.setdefault(fs[0], fs)
                block_faces[(comp.id, axis, side)] = fs[0]
    fkeys = sorted(faces_by_key)
    fremap = {k: i for i, k in enumerate(fkeys)}
    faces = []
    face_of = {}
    for k in fkeys:
        fs = faces_by_key[k]
        bf = BaseFace(fremap[k], fs, bool(mesh.boundary_face[list(fs)].all()))
        faces.append(bf)
        for f in fs:
            face_of[f] = bf.id
    block_faces = {k: fremap[v] for k, v in block_faces.items()}

    return BaseComplex(mesh, components, bverts, edges, faces, edge_of, face_of, component_of,
                       singularity, separators, cuts, block_edges, block_faces)


# ---------------------------------------------------------------------------
# sheets


@dataclass
class EdgePair:
    left: int          # base edge on F_L
    right: int         # base edge on F_R
    boundary_face: bool
    mesh_pairs: tuple  # ((mesh edge on F_L, mesh edge on F_R), ...)


@dataclass
class Sheet:
    id: int
    nodes: list               # (component, axis, orientation)
    components: list
    hexes: np.ndarray
    collapse_edges: np.ndarray   # mesh edges parallel to the collapsing direction
    middle_edges: list           # base edges of E_M
    left_faces: list             # base faces of F_L
    right_faces: list
    edge_pairs: list
    vertex_pairs: list           # (v_l, v_r, length along the base edge)
    self_intersecting: bool
    closed_loop: bool
    boundary_sided: bool
    touches_feature: bool
    feature_on_middle: bool
    orientable: bool = True

    @property
    def key(self):
        return (int(self.hexes.min()), len(self.hexes), tuple(sorted((n[0], n[1]) for n in self.nodes)))


def _neighbors_across(mesh, bc, comp, axis, coord):
    """Components adjacent to a block side, with one shared mesh face each."""
    out = {}
    for f in comp.side_faces(mesh, axis, coord):
        if mesh.boundary_face[f]:
            continue
        a, b = (int(h) for h in mesh.face_hexes[f])
        other = b if bc.component_of[a] == comp.id else a
        out.setdefault(int(bc.component_of[other]), f)
    return out


def _axis_of(comp, u, w):
    cu = np.array(comp.coords[u])
    cw = np.array(comp.coords[w])
    d = cw - cu
    ax = int(np.flatnonzero(d)[0])
    return ax, int(np.sign(d[ax]))


def extract_sheets(bc):
    mesh = bc.mesh
    comps = bc.components
    nodes = [(c.id, a) for c in comps for a in range(3)]
    seen = {}
    sheets = []
    for start in nodes:
        if start in seen:
            continue
        orient = {start: 1}
        orientable = True
        queue = deque([start])
        chi_edges = set()
        while queue:
            cid, a = queue.popleft()
            comp = comps[cid]
            for d in range(3):
                if d == a:
                    continue
                for side in (0, comp.extents[d]):
                    chi_edges.add(bc.block_faces[(cid, d, side)])
                    for c2, f in _neighbors_across(mesh, bc, comp, d, side).items():
                        quad = [int(v) for v in mesh.faces[f]]
                        u = w = None
                        for i in range(4):
                            p, q = quad[i], quad[(i + 1) % 4]
                            ax, s = _axis_of(comp, p, q)
                            if ax == a:
                                u, w = (p, q) if s > 0 else (q, p)
                                break
                        a2, s2 = _axis_of(comps[c2], u, w)
                        nxt = (c2, a2)
                        o = orient[(cid, a)] * s2
                        if nxt in orient:
                            if orient[nxt] != o:
                                orientable = False
                        else:
                            orient[nxt] = o
                            queue.append(nxt)
        for n in orient:
            seen[n] = True
        sheets.append(_build_sheet(bc, orient, orientable, chi_edges))
    sheets.sort(key=lambda s: s.key)
    for i, s in enumerate(sheets):
        s.id = i
    return sheets


def _build_sheet(bc, orient, orientable, chi_edges):
    mesh = bc.mesh
    comps = bc.components
    node_list = sorted((c, a, o) for (c, a), o in orient.items())
    comp_ids = sorted({n[0] for n in node_list})
    hexes = np.concatenate([comps[c].hexes for c in comp_ids])
    self_int = len(comp_ids) < len(node_list)

    collapse_edges = set()
    middle = set()
    pairs = {}
    vpairs = {}
    left_faces, right_faces = set(), set()
    chi_verts = set()
    bsided = True
    for cid, a, o in node_list:
        comp = comps[cid]
        ext = comp.extents
        L, R = (0, ext[a]) if o > 0 else (ext[a], 0)
        others = [x for x in range(3) if x != a]
        for c1 in (0, ext[others[0]]):
            for c2 in (0, ext[others[1]]):
                middle.update(bc.block_edges[(cid, a, c1, c2)])
                line = comp.line(a, {others[0]: c1, others[1]: c2})
                if o < 0:
                    line = line[::-1]
                length = float(np.linalg.norm(np.diff(mesh.vertices[line], axis=0), axis=1).sum())
                vpairs[(line[0], line[-1])] = length
                chi_verts.add(frozenset((line[0], line[-1])))
        # every collapsing mesh edge of the block
        g = comp.grid
        lo = np.take(g, range(0, ext[a]), axis=a).ravel()
        hi = np.take(g, range(1, ext[a] + 1), axis=a).ravel()
        for u, w in zip(lo, hi):
            collapse_edges.add(mesh.edge_id(int(u), int(w)))
        lf = bc.block_faces[(cid, a, L)]
        rf = bc.block_faces[(cid, a, R)]
        left_faces.add(lf)
        right_faces.add(rf)
        if not (bc.faces[lf].boundary and bc.faces[rf].boundary):
            bsided = False
        # edge pairs on the two sides
        for d in others:
            t = [x for x in others if x != d][0]
            for ct in (0, ext[t]):
                lline = comp.line(d, {a: L, t: ct})
                rline = comp.line(d, {a: R, t: ct})
                conn = bc.block_faces[(cid, t, ct)]
                for i in range(len(lline) - 1):
                    el = mesh.edge_id(lline[i], lline[i + 1])
                    er = mesh.edge_id(rline[i], rline[i + 1])
                    key = (bc.edge_of[el], bc.edge_of[er])
                    entry = pairs.setdefault(key, [bc.faces[conn].boundary, set()])
                    entry[1].add((el, er))
                    entry[0] = entry[0] and bc.faces[conn].boundary
    edge_pairs = [EdgePair(l, r, bdy, tuple(sorted(mp))) for (l, r), (bdy, mp) in sorted(pairs.items())]
    vertex_pairs = [(a, b, ln) for (a, b), ln in sorted(vpairs.items())]

    chi = len(chi_verts) - len(chi_edges) + len(node_list)
    closed = (not orientable) or chi <= 0
    hexverts = np.unique(mesh.hexes[hexes])
    ce = np.array(sorted(collapse_edges), dtype=np.int64)
    return Sheet(
        id=-1, nodes=node_list, components=comp_ids, hexes=np.sort(hexes),
        collapse_edges=ce, middle_edges=sorted(middle),
        left_faces=sorted(left_faces), right_faces=sorted(right_faces),
        edge_pairs=edge_pairs, vertex_pairs=vertex_pairs,
        self_intersecting=self_int, closed_loop=closed, boundary_sided=bsided,
        touches_feature=bool(mesh.feature_vertex[hexverts].any()),
        feature_on_middle=bool(mesh.feature_edge[ce].any()),
        orientable=orientable,
    )


# ---------------------------------------------------------------------------
# chords


@dataclass
class ChordBlock:
    """One component of a chord column.

    ``origin``, ``u_dir`` and ``v_dir`` locate the cross-section corners in the
    component lattice: A = origin, B = origin + n_u * u_dir, D = origin + n_v * v_dir.
    """
    component: int
    axis: int
    origin: tuple
    u_dir: tuple
    v_dir: tuple
    n_u: int
    n_v: int
    groups: dict        # 'A'..'D' -> dict(base_edges, valence, boundary, singular)


@dataclass
class Chord:
    id: int
    blocks: list
    closed: bool
    touches_feature: bool
    feature_crossing: bool
    degenerate: bool
    conforming: bool
    hexes: np.ndarray

    @property
    def k(self):
        return len(self.blocks)

    @property
    def square(self):
        return all(b.n_u == b.n_v for b in self.blocks)

    @property
    def key(self):
        return (int(self.hexes.min()), len(self.hexes), tuple(sorted((b.component, b.axis) for b in self.blocks)))

    def pairing(self, index):
        """Per-block (sub1, sub2, main_left, main_right) group labels."""
        return ("B", "D", "A", "C") if index == 0 else ("A", "C", "B", "D")


def _group_info(bc, comp, axis, lattice_uv):
    others = [x for x in range(3) if x != axis]
    line = comp.line(axis, {others[0]: lattice_uv[others[0]], others[1]: lattice_uv[others[1]]})
    key = tuple(lattice_uv[o] for o in others)
    bes = bc.block_edges[(comp.id, axis, key[0], key[1])]
    mesh = bc.mesh
    e0 = mesh.edge_id(line[0], line[1])
    return dict(base_edges=bes, valence=len(mesh.edge_hexes[e0]),
                boundary=bool(mesh.boundary_edge[e0]),
                singular=any(bc.edges[b].singular for b in bes),
                line=line)


def extract_chords(bc):
    mesh = bc.mesh
    comps = bc.components
    adj = {}
    conforming = {}
    for comp in comps:
        for a in range(3):
            links = []
            ok = True
            for side in (0, comp.extents[a]):
                nb = _neighbors_across(mesh, bc, comp, a, side)
                if len(nb) > 1:
                    ok = False
                for c2, f in nb.items():
                    fv = [int(v) for v in mesh.faces[f]]
                    cs = np.array([comps[c2].coords[v] for v in fv])
                    a2 = int(np.flatnonzero((cs == cs[0]).all(axis=0))[0])
                    links.append(((c2, a2), side))
            adj[(comp.id, a)] = links
            conforming[(comp.id, a)] = ok

    seen = set()
    chords = []
    for start in sorted(adj):
        if start in seen:
            continue
        # collect the column
        col = {start}
        stack = [start]
        while stack:
            n = stack.pop()
            for m, _ in adj[n]:
                if m not in col:
                    col.add(m)
                    stack.append(m)
        seen |= col
        ends = [n for n in col if len({m for m, _ in adj[n]}) < 2 or len(adj[n]) < 2]
        closed = not ends
        first = min(ends) if ends else min(col)
        chords.append(_build_chord(bc, first, adj, col, closed, all(conforming[n] for n in col)))
    chords.sort(key=lambda c: c.key)
    for i, c in enumerate(chords):
        c.id = i
    return chords


def _build_chord(bc, first, adj, col, closed, conforming):
    mesh = bc.mesh
    comps = bc.components
    cid, a = first
    comp = comps[cid]
    others = [x for x in range(3) if x != a]
    # entry side: the side without a neighbour (open chord) or coordinate 0
    sides = {s for _, s in adj[first]}
    entry = 0 if (closed or 0 not in sides) else comp.extents[a]
    origin = [0, 0, 0]
    origin[a] = entry
    u_dir = [0, 0, 0]
    u_dir[others[0]] = 1
    v_dir = [0, 0, 0]
    v_dir[others[1]] = 1
    blocks = []
    visited = set()
    node = first
    while True:
        visited.add(node)
        cid, a = node
        comp = comps[cid]
        others = [x for x in range(3) if x != a]
        n_u = comp.extents[int(np.flatnonzero(u_dir)[0])]
        n_v = comp.extents[int(np.flatnonzero(v_dir)[0])]
        groups = {}
        for label, (i, j) in zip("ABCD", ((0, 0), (n_u, 0), (n_u, n_v), (0, n_v))):
            p = np.array(origin) + i * np.array(u_dir) + j * np.array(v_dir)
            groups[label] = _group_info(bc, comp, a, p)
        blocks.append(ChordBlock(cid, a, tuple(origin), tuple(u_dir), tuple(v_dir), n_u, n_v, groups))
        exit_side = comp.extents[a] if origin[a] == 0 else 0
        nxt = [m for m, s in adj[node] if s == exit_side and m not in visited]
        if not nxt or len(blocks) > len(col):
            break
        # carry the cross-section frame into the next block through shared corner vertices
        c2, a2 = nxt[0]
        comp2 = comps[c2]

        def far(p):
            q = list(p)
            q[a] = exit_side
            return comp.grid[tuple(q)]

        A = comp2.coords[int(far(origin))]
        B = comp2.coords[int(far(np.array(origin) + n_u * np.array(u_dir)))]
        D = comp2.coords[int(far(np.array(origin) + n_v * np.array(v_dir)))]
        origin = tuple(A)
        u_dir = tuple(int(np.sign(x)) for x in np.array(B) - np.array(A))
        v_dir = tuple(int(np.sign(x)) for x in np.array(D) - np.array(A))
        node = (c2, a2)

    hexes = np.sort(np.concatenate([comps[b.component].hexes for b in blocks]))
    hexverts = np.unique(mesh.hexes[hexes])
    sides_bdy = []
    for b in blocks:
        comp = comps[b.component]
        for ax in range(3):
            if ax == b.axis:
                continue
            for s in (0, comp.extents[ax]):
                sides_bdy.append(bc.faces[bc.block_faces[(b.component, ax, s)]].boundary)
    degenerate = all(sides_bdy) or len(hexes) == mesh.n_hexes
    hex_edges = np.unique(mesh.hex_edges[hexes])
    return Chord(
        id=-1, blocks=blocks, closed=closed,
        touches_feature=bool(mesh.feature_vertex[hexverts].any()),
        feature_crossing=bool(mesh.feature_edge[hex_edges].any()),
        degenerate=degenerate, conforming=conforming and len(blocks) == len(col),
        hexes=hexes,
    )


def sheet_components_of_hexes(bc, hexes):
    return sorted({int(bc.component_of[h]) for h in hexes})
