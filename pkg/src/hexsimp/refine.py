"""Adaptive sheet refinement."""

from dataclasses import dataclass, field

import numpy as np

from .collapse import hex_sheet
from .mesh import EDGE_DIRECTION, HEX_EDGES, HEX_FACES, build_mesh, carry_features, \
    corner_jacobians, mean_edge_length
from .surface import quad_samples

TRIGGERS = ("hausdorff", "element_count", "collapse_failure")


@dataclass
class RefinementPlan:
    trigger: str
    sheet: int = -1                 # base-complex sheet id, -1 when nothing is admissible
    edge: int = -1                  # seed edge of the hex-level sheet to split
    hr: dict = field(default_factory=dict)
    l_b: dict = field(default_factory=dict)
    cap: float = float("inf")

    @property
    def empty(self):
        return self.sheet < 0


def sheet_boundary_quads(mesh, hexes):
    quads = []
    for h in hexes:
        for k in range(6):
            if mesh.boundary_face[mesh.hex_faces[h, k]]:
                quads.append(mesh.hexes[h][HEX_FACES[k]])
    return np.array(quads, dtype=np.int64).reshape(-1, 4)


def sheet_hausdorff(mesh, input_surface, sheet, samples_per_quad=4):
    """Mean sampled distance of the sheet's boundary quads to the input surface over its diagonal."""
    hexes = sheet.hexes if hasattr(sheet, "hexes") else np.asarray(sheet)
    quads = sheet_boundary_quads(mesh, hexes)
    if len(quads) == 0:
        return 0.0
    pts = quad_samples(mesh.vertices[quads], samples_per_quad)
    return float(input_surface.distances(pts).mean() / input_surface.diagonal)


def collapse_direction_length(mesh, sheet):
    e = mesh.edges[sheet.collapse_edges]
    return float(np.linalg.norm(mesh.vertices[e[:, 0]] - mesh.vertices[e[:, 1]], axis=1).mean())


def _split_seed(mesh, sheet):
    """Collapsing-direction edge of the sheet's longest hex-level layer."""
    best, best_len, seen = -1, -1.0, set()
    for e in sheet.collapse_edges:
        e = int(e)
        if e in seen:
            continue
        edges, hexes, self_int = hex_sheet(mesh, e)
        seen.update(int(x) for x in edges)
        if self_int:
            continue
        p = mesh.vertices[mesh.edges[edges]]
        ln = float(np.linalg.norm(p[:, 0] - p[:, 1], axis=1).mean())
        if ln > best_len:
            best, best_len = e, ln
    return best


def adjacent_sheets(failed, sheets):
    """Sheets sharing a base-complex face with the failed sheet's F_L or F_R."""
    faces = set(failed.left_faces) | set(failed.right_faces)
    return [s for s in sheets if s.id != failed.id
            and faces & (set(s.left_faces) | set(s.right_faces))]


def select_refinement_sheet(mesh, sheets, trigger, input_surface, c0, failed=None,
                            samples_per_quad=4):
    """Choose a sheet to split according to HR(s), L_b and the element-count cap."""
    if trigger not in TRIGGERS:
        raise ValueError(f"unknown trigger {trigger!r}")
    cands = adjacent_sheets(failed, sheets) if trigger == "collapse_failure" else list(sheets)
    cands = [s for s in cands if not s.self_intersecting]
    cap = 1.5 * (c0 - mesh.n_hexes)
    cap = cap if cap > 0 else float("inf")
    plan = RefinementPlan(trigger, cap=cap)
    if not cands:
        return plan
    L = mean_edge_length(mesh)
    seeds = {}
    sizes = {}
    for s in cands:
        plan.hr[s.id] = sheet_hausdorff(mesh, input_surface, s, samples_per_quad)
        plan.l_b[s.id] = collapse_direction_length(mesh, s)
        seeds[s.id] = _split_seed(mesh, s)
        sizes[s.id] = len(hex_sheet(mesh, seeds[s.id])[1]) if seeds[s.id] >= 0 else np.inf
    ok = [s for s in cands if seeds[s.id] >= 0 and sizes[s.id] < cap]
    top = sorted(ok, key=lambda s: (-plan.hr[s.id], s.id))[:4]
    pick = next((s for s in top if plan.l_b[s.id] > 1.2 * L), None)
    if pick is None and ok:
        pick = max(ok, key=lambda s: (plan.l_b[s.id], -s.id))
    if pick is not None:
        plan.sheet = pick.id
        plan.edge = seeds[pick.id]
    return plan


def split_sheet(mesh, edge, input_surface=None):
    """Split every hex of the hex-level sheet through ``edge`` into two."""
    edges, hexes, self_int = hex_sheet(mesh, edge)
    if self_int:
        raise ValueError("self-intersecting sheet cannot be split conformingly")
    n = mesh.n_vertices
    mid = {int(e): n + i for i, e in enumerate(edges)}
    ends = mesh.edges[edges]
    new_pts = mesh.vertices[ends].mean(axis=1)
    bdy = mesh.boundary_edge[edges]
    if input_surface is not None and bdy.any():
        projected = new_pts.copy()
        projected[bdy] = input_surface.project(new_pts[bdy])
    else:
        projected = new_pts
    in_sheet = np.zeros(mesh.n_hexes, dtype=bool)
    in_sheet[hexes] = True
    out = [mesh.hexes[h] for h in np.flatnonzero(~in_sheet)]
    for h in hexes:
        hv = mesh.hexes[h]
        k = int(np.flatnonzero(np.isin(mesh.hex_edges[h], edges))[0])
        d = EDGE_DIRECTION[k]
        lo, hi = hv.copy(), hv.copy()
        for j in np.flatnonzero(EDGE_DIRECTION == d):
            a, b = HEX_EDGES[j]
            m = mid[int(mesh.hex_edges[h, j])]
            lo[b] = m
            hi[a] = m
        out.extend([lo, hi])
    extra = []
    for e, m in mid.items():
        if mesh.feature_edge[e]:
            a, b = mesh.edges[e]
            extra += [(a, m), (m, b)]
    for pts in (projected, new_pts):
        verts = np.vstack([mesh.vertices, pts])
        new = build_mesh(verts, np.array(out), mesh.revision + 1)
        sj, _ = corner_jacobians(verts[new.hexes])
        if (sj > 0).all() or pts is new_pts:
            break
    vmap = np.arange(n)
    return carry_features(mesh, new, np.concatenate([vmap, np.arange(n, new.n_vertices)]), extra)
