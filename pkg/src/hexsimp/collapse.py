"""Base-complex sheet and chord collapse with filtering, relocation and rollback.

Meshes are immutable, so a failed attempt simply hands back the input mesh.
"""

from dataclasses import dataclass, field

import numpy as np

from .local_param import build_region, laplace_regularize, optimize_region
from .mesh import EDGE_DIRECTION, HEX_EDGES, MeshError, carry_features, compact, \
    scaled_jacobians, validate
from .metrics import hausdorff_ratio
from .surface import BoundarySurface


class StaleRevisionError(RuntimeError):
    pass


@dataclass
class CollapseContext:
    surface: BoundarySurface          # input boundary, the projection target
    r_h: float = 0.01
    beta: int = 4
    slim_iterations: int = 50
    laplace_epsilon: float = 1e-3
    laplace_iterations: int = 50
    samples_per_quad: int = 4
    chord_threshold: float = 0.9
    equalize_attempts: int = 3


@dataclass
class Verdict:
    accepted: bool
    reason: str = ""
    predicted: list = field(default_factory=list)   # (left BE, right BE, boundary, predicted)

    def __bool__(self):
        return self.accepted


@dataclass
class CollapseCandidate:
    kind: str                 # "sheet" | "chord"
    target: int
    direction: int = -1       # chord pairing index
    score: float = 0.0
    verdict: Verdict = None
    revision: int = 0


@dataclass
class CollapseOutcome:
    status: str               # success | rejected | rolled_back
    reason: str
    mesh: object
    affected: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    merged_edges: list = field(default_factory=list)   # (new edge id, predicted valence)

    @property
    def success(self):
        return self.status == "success"


# ---------------------------------------------------------------------------
# valence prediction


def predict_edge_valence(v_l, v_r, connecting_face_on_boundary):
    """Valence of the edge obtained by merging ``e_l`` and ``e_r``.

    Each of the two edges loses the sheet hexes incident to it: one when the
    connecting face lies on the boundary, two when it is interior.
    """
    if v_l < 1 or v_r < 1:
        raise ValueError("valences must be positive")
    return v_l + v_r - (2 if connecting_face_on_boundary else 4)


def _regular(boundary):
    return 3 if boundary else 4


def chord_valence_deviation(chord, pairing):
    """D_v(c) for one of the two diagonal pairings."""
    p1, p2, l, r = chord.pairing(pairing)
    total = 0
    for b in chord.blocks:
        g = b.groups
        total += abs(g[p1]["valence"] - _regular(g[p1]["boundary"]) - 1)
        total += abs(g[p2]["valence"] - _regular(g[p2]["boundary"]) - 1)
        total += abs(g[l]["valence"] + g[r]["valence"]
                     - min(_regular(g[l]["boundary"]), _regular(g[r]["boundary"])) - 2)
    return total


def chord_direction(chord):
    """(pairing, D(c)) minimising the valence deviation; ties keep pairing 0."""
    d = [chord_valence_deviation(chord, i) for i in (0, 1)]
    k = int(np.argmin(d))
    return k, d[k]


def chord_singular_groups(chord):
    """Number of the four parallel groups carrying a singular edge anywhere along the chord."""
    return sum(any(b.groups[g]["singular"] for b in chord.blocks) for g in "ABCD")


# ---------------------------------------------------------------------------
# shared merge machinery


class _UnionFind:
    def __init__(self, n):
        self.parent = np.arange(n)

    def find(self, a):
        p = self.parent
        root = a
        while p[root] != root:
            root = p[root]
        while p[a] != root:
            p[a], a = root, p[a]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _check_revision(mesh, bc):
    if bc.mesh is not mesh and bc.mesh.revision != mesh.revision:
        raise StaleRevisionError(
            f"base complex built for revision {bc.mesh.revision}, mesh is at {mesh.revision}")


def _merge_topology(mesh, rep, delete):
    """Apply a vertex merge and hex deletion; returns (new mesh, vertex map) or a reason."""
    keep = np.setdiff1d(np.arange(mesh.n_hexes), delete)
    if len(keep) == 0:
        return None, "would empty mesh"
    hexes = rep[mesh.hexes[keep]]
    if any(len(set(h.tolist())) != 8 for h in hexes):
        return None, "would create degenerate hex"
    try:
        new, vmap = compact(mesh.vertices, hexes, mesh.revision + 1)
    except MeshError:
        return None, "would create doublet/non-manifold"
    rep_map = vmap[rep]
    if getattr(new, "_overfull_faces", ()):
        return None, "would create doublet/non-manifold"
    report = validate(new)
    if report.doublets or report.non_manifold_edges or report.non_conforming_faces \
            or not report.is_manifold:
        return None, "would create doublet/non-manifold"
    return (new, rep_map, keep), ""


def _relocate(old, new, rep_map, positions, merged_old, ctx, boundary_merged):
    """Place merged vertices, optimise the beta-ring and check the hard constraints."""
    X = np.empty((new.n_vertices, 3))
    valid = rep_map >= 0
    X[rep_map[valid]] = positions[valid]
    seeds = np.unique(rep_map[merged_old])
    seeds = seeds[seeds >= 0]
    bdy = seeds[new.boundary_vertex[seeds]]
    if len(bdy):
        X[bdy] = ctx.surface.project(X[bdy])
    mesh = carry_features(old, new.with_positions(X), rep_map)
    region = build_region(mesh, seeds, beta=ctx.beta, interface=seeds)
    res = optimize_region(mesh, region, ctx.surface, max_outer=ctx.slim_iterations)
    if not res.success:
        return None, "inverted"
    Y = laplace_regularize(mesh, region, ctx.laplace_epsilon, ctx.laplace_iterations, X=res.positions)
    mesh = mesh.with_positions(Y)
    if (scaled_jacobians(mesh) <= 0).any():
        return None, "inverted"
    hr = hausdorff_ratio(BoundarySurface.from_mesh(mesh), ctx.surface, ctx.samples_per_quad)
    if hr > ctx.r_h:
        return None, "hausdorff"
    return (mesh, region.hexes), ""


def _merged_positions(mesh, uf, members_of):
    """Mean position per merge class, indexed by old vertex."""
    pos = mesh.vertices.copy()
    for root, members in members_of.items():
        if len(members) > 1:
            pos[members] = mesh.vertices[members].mean(axis=0)
    return pos


def _classes(uf, n):
    roots = np.array([uf.find(v) for v in range(n)])
    out = {}
    for v in np.flatnonzero(roots != np.arange(n)):
        out.setdefault(int(roots[v]), [int(roots[v])]).append(int(v))
    return roots, out


# ---------------------------------------------------------------------------
# sheets


def _sheet_merge(mesh, sheet, bc):
    """Union the columns of every collapsing edge; left (F_L) vertices represent."""
    uf = _UnionFind(mesh.n_vertices)
    for e in sheet.collapse_edges:
        a, b = mesh.edges[e]
        uf.union(int(a), int(b))
    roots, members = _classes(uf, mesh.n_vertices)
    left = set()
    right = set()
    for cid, a, o in sheet.nodes:
        comp = bc.components[cid]
        L, R = (0, comp.extents[a]) if o > 0 else (comp.extents[a], 0)
        left.update(int(v) for v in np.take(comp.grid, L, axis=a).ravel())
        right.update(int(v) for v in np.take(comp.grid, R, axis=a).ravel())
    rep = np.arange(mesh.n_vertices)
    pos = mesh.vertices.copy()
    for root, vs in members.items():
        ls = [v for v in vs if v in left]
        rs = [v for v in vs if v in right]
        if len(ls) != 1 or len(rs) != 1:
            return None
        rep[vs] = ls[0]
        fl, fr = mesh.feature_vertex[ls[0]], mesh.feature_vertex[rs[0]]
        if fl != fr:
            # a crease vertex keeps its place
            pos[vs] = mesh.vertices[ls[0] if fl else rs[0]]
        else:
            pos[vs] = 0.5 * (mesh.vertices[ls[0]] + mesh.vertices[rs[0]])
    merged = np.array(sorted(v for vs in members.values() for v in vs), dtype=np.int64)
    return rep, pos, merged


def _sheet_predictions(mesh, sheet, bc):
    out = []
    for pair in sheet.edge_pairs:
        vl = bc.edges[pair.left].valence
        vr = bc.edges[pair.right].valence
        out.append((pair.left, pair.right, pair.boundary_face,
                    predict_edge_valence(vl, vr, pair.boundary_face)))
    return out


def can_collapse_sheet(mesh, bc, sheet):
    _check_revision(mesh, bc)
    if sheet.touches_feature:
        return Verdict(False, "touches_feature")
    if sheet.feature_on_middle:
        return Verdict(False, "feature edge on collapsing base edge")
    if sheet.boundary_sided:
        return Verdict(False, "boundary_sided")
    if len(sheet.hexes) >= mesh.n_hexes:
        return Verdict(False, "would empty mesh")
    pred = _sheet_predictions(mesh, sheet, bc)
    for l, r, bdy, v in pred:
        merged_bdy = bc.edges[l].boundary or bc.edges[r].boundary
        if v < 1 or (not merged_bdy and v < 3):
            return Verdict(False, "predicted valence invalid", pred)
    if sheet.self_intersecting or not sheet.orientable:
        return Verdict(False, "self_intersecting", pred)
    merge = _sheet_merge(mesh, sheet, bc)
    if merge is None:
        return Verdict(False, "self_intersecting", pred)
    res, reason = _merge_topology(mesh, merge[0], sheet.hexes)
    if res is None:
        return Verdict(False, reason, pred)
    return Verdict(True, "", pred)


def collapse_sheet(mesh, bc, sheet, ctx, verdict=None):
    verdict = can_collapse_sheet(mesh, bc, sheet) if verdict is None else verdict
    if not verdict:
        return CollapseOutcome("rejected", verdict.reason, mesh)
    rep, pos, merged = _sheet_merge(mesh, sheet, bc)
    (new, rep_map, keep), _ = _merge_topology(mesh, rep, sheet.hexes)
    res, reason = _relocate(mesh, new, rep_map, pos, merged, ctx, None)
    if res is None:
        return CollapseOutcome("rolled_back", reason, mesh)
    out, affected = res
    merged_edges = []
    pred = {(l, r): v for l, r, _, v in verdict.predicted}
    for pair in sheet.edge_pairs:
        for el, _ in pair.mesh_pairs:
            a, b = rep_map[mesh.edges[el]]
            merged_edges.append((out.edge_id(int(a), int(b)), pred[(pair.left, pair.right)]))
    return CollapseOutcome("success", "", out, affected, merged_edges)


# ---------------------------------------------------------------------------
# hex-level sheets (used for chord equalisation and refinement)


def hex_sheet(mesh, edge):
    """Topologically parallel edge class of ``edge`` and the hexes it sweeps."""
    edges = {int(edge)}
    hexes = set()
    stack = [int(edge)]
    dirs = {}
    while stack:
        e = stack.pop()
        for h in mesh.edge_hexes[e]:
            k = int(np.flatnonzero(mesh.hex_edges[h] == e)[0])
            d = int(EDGE_DIRECTION[k])
            dirs.setdefault(h, set()).add(d)
            hexes.add(h)
            for j in np.flatnonzero(EDGE_DIRECTION == d):
                f = int(mesh.hex_edges[h, j])
                if f not in edges:
                    edges.add(f)
                    stack.append(f)
    self_int = any(len(d) > 1 for d in dirs.values())
    return np.array(sorted(edges)), np.array(sorted(hexes)), self_int


def collapse_hex_sheet(mesh, edge, ctx):
    """Collapse the hex-level sheet through ``edge``; returns (outcome, vertex map)."""
    edges, hexes, self_int = hex_sheet(mesh, edge)
    if self_int:
        return CollapseOutcome("rejected", "self_intersecting", mesh), None
    if mesh.feature_vertex[np.unique(mesh.hexes[hexes])].any():
        return CollapseOutcome("rejected", "touches_feature", mesh), None
    uf = _UnionFind(mesh.n_vertices)
    for e in edges:
        a, b = mesh.edges[e]
        uf.union(int(a), int(b))
    roots, members = _classes(uf, mesh.n_vertices)
    if any(len(vs) != 2 for vs in members.values()):
        return CollapseOutcome("rejected", "self_intersecting", mesh), None
    pos = _merged_positions(mesh, uf, members)
    res, reason = _merge_topology(mesh, roots, hexes)
    if res is None:
        return CollapseOutcome("rejected", reason, mesh), None
    new, rep_map, keep = res
    merged = np.array(sorted(v for vs in members.values() for v in vs), dtype=np.int64)
    out, reason = _relocate(mesh, new, rep_map, pos, merged, ctx, None)
    if out is None:
        return CollapseOutcome("rolled_back", reason, mesh), None
    return CollapseOutcome("success", "", out[0], out[1]), rep_map


# ---------------------------------------------------------------------------
# chords


def can_collapse_chord(mesh, bc, chord):
    _check_revision(mesh, bc)
    if chord.touches_feature:
        return Verdict(False, "touches_feature")
    if chord.feature_crossing:
        return Verdict(False, "feature edge crosses chord")
    if not chord.conforming:
        return Verdict(False, "non-conforming chord")
    if chord.degenerate:
        return Verdict(False, "would empty mesh")
    if chord_singular_groups(chord) < 2:
        return Verdict(False, "parallel-group pre-check")
    pairing, d = chord_direction(chord)
    if d / (3.0 * chord.k) > 0.9:
        return Verdict(False, "threshold")
    return Verdict(True, "", [(pairing, d)])


def _chord_merge(mesh, bc, chord, pairing):
    uf = _UnionFind(mesh.n_vertices)
    for b in chord.blocks:
        comp = bc.components[b.component]
        n = b.n_u
        o = np.array(b.origin)
        u = np.array(b.u_dir)
        v = np.array(b.v_dir)
        for t in range(comp.extents[b.axis] + 1):
            for i in range(n + 1):
                for j in range(n + 1):
                    mi, mj = (n - j, n - i) if pairing == 0 else (j, i)
                    p = o + i * u + j * v
                    q = o + mi * u + mj * v
                    p[b.axis] = q[b.axis] = t
                    uf.union(int(comp.grid[tuple(p)]), int(comp.grid[tuple(q)]))
    roots, members = _classes(uf, mesh.n_vertices)
    pos = _merged_positions(mesh, uf, members)
    merged = np.array(sorted(v for vs in members.values() for v in vs), dtype=np.int64)
    return roots, pos, merged


def _wider_edge(bc, chord):
    """A mesh edge of an interior sub-sheet across the wider cross-section direction."""
    b = chord.blocks[0]
    comp = bc.components[b.component]
    if b.n_u > b.n_v:
        d, n = np.array(b.u_dir), b.n_u
    else:
        d, n = np.array(b.v_dir), b.n_v
    i = n // 2
    p = np.array(b.origin) + i * d
    q = p + d
    e = bc.mesh.edge_id(int(comp.grid[tuple(p)]), int(comp.grid[tuple(q)]))
    # locate the chord again after the sub-sheet collapse by its corner-A column
    col = np.array(b.origin)
    col2 = col.copy()
    col2[b.axis] += 1 if col[b.axis] == 0 else -1
    anchor = (int(comp.grid[tuple(col)]), int(comp.grid[tuple(col2)]))
    return e, anchor


def _find_chord(bc, chords, anchor):
    a, b = anchor
    for c in chords:
        for blk in c.blocks:
            for g in blk.groups.values():
                line = g["line"]
                for x, y in zip(line[:-1], line[1:]):
                    if {x, y} == {a, b}:
                        return c
    return None


def collapse_chord(mesh, bc, chord, ctx, verdict=None):
    from .base_complex import extract_base_complex, extract_chords

    verdict = can_collapse_chord(mesh, bc, chord) if verdict is None else verdict
    if not verdict:
        return CollapseOutcome("rejected", verdict.reason, mesh)
    current, cbc, cchord = mesh, bc, chord
    for _ in range(ctx.equalize_attempts + 1):
        if cchord.square:
            break
        edge, anchor = _wider_edge(cbc, cchord)
        sub, vmap = collapse_hex_sheet(current, edge, ctx)
        if not sub.success:
            return CollapseOutcome("rejected", "sub-sheet equalization failed: " + sub.reason, mesh)
        current = sub.mesh
        cbc = extract_base_complex(current)
        anchor = tuple(int(vmap[x]) for x in anchor)
        cchord = _find_chord(cbc, extract_chords(cbc), anchor)
        if cchord is None or min(anchor) < 0:
            return CollapseOutcome("rejected", "sub-sheet equalization lost the chord", mesh)
    else:
        return CollapseOutcome("rejected", "sub-sheet equalization limit", mesh)

    pairing, _ = chord_direction(cchord)
    rep, pos, merged = _chord_merge(current, cbc, cchord, pairing)
    res, reason = _merge_topology(current, rep, cchord.hexes)
    if res is None:
        return CollapseOutcome("rejected", reason, mesh)
    new, rep_map, keep = res
    out, reason = _relocate(current, new, rep_map, pos, merged, ctx, None)
    if out is None:
        return CollapseOutcome("rolled_back", reason, mesh)
    return CollapseOutcome("success", "", out[0], out[1])
