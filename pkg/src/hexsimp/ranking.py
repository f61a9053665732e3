"""Ranking energies for sheets and chords and the two priority queues.

Scores are ascending: the smallest score is popped first.
"""

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .collapse import can_collapse_chord, can_collapse_sheet, chord_direction
from .mesh import OPPOSITE_FACES, mean_edge_length, shape_metrics
from .metrics import gaussian_curvatures

_TERM_LO = 1e-9
_TERM_HI = 2.0 - 1e-9


@dataclass(frozen=True)
class RankWeights:
    k_sv: float = 0.6
    k_sd: float = 0.2
    k_sq: float = 0.2
    k_cq: float = 0.5
    k_cv: float = 0.5
    beta: float = 1.67
    gamma: float = 0.5
    d0: float = 0.55
    c0: float = 0.9
    alpha_a: float = 0.7
    alpha_b: float = 0.3
    auto_polycube: bool = True

    def __post_init__(self):
        for name in ("k_sv", "k_sd", "k_sq", "k_cq", "k_cv", "beta"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if abs(self.alpha_a + self.alpha_b - 1.0) > 1e-9:
            raise ValueError("alpha_a + alpha_b must equal 1")
        if not 0 < self.d0 < 2:
            raise ValueError("d0 must lie in (0, 2)")
        if not 0 < self.c0 <= 1:
            raise ValueError("c0 must lie in (0, 1]")

    def scaled(self, factor):
        return replace(self, k_sv=self.k_sv * factor, k_sd=self.k_sd * factor,
                       k_sq=self.k_sq * factor, k_cq=self.k_cq * factor, k_cv=self.k_cv * factor)


def _clamp(x):
    return float(min(max(x, _TERM_LO), _TERM_HI))


def _regular(boundary):
    return 3 if boundary else 4


# ---------------------------------------------------------------------------
# singularity energy


def singularity_energy(bc):
    """E(m): sum of |v(e) - p(e)| over singular base-complex edges."""
    return int(sum(abs(e.valence - e.regular_valence) for e in bc.edges if e.singular))


def _whole_chains_in_middle(bc, sheet):
    """Singular chains lying entirely in the sheet's collapsing edges."""
    inside = set(int(e) for e in sheet.collapse_edges)
    return [c for c in bc.singularity.chains if set(c.edges) <= inside]


def T(k):
    if k < 0:
        return 0.5 * k
    if k == 0:
        return 1.0
    return float(k)


def sheet_valence_term(sheet, bc, dm, beta=1.67, predicted=None):
    """E_sv before clamping."""
    from .collapse import predict_edge_valence

    total = 0.0
    for pair in sheet.edge_pairs:
        el = bc.edges[pair.left]
        er = bc.edges[pair.right]
        v_new = predict_edge_valence(el.valence, er.valence, pair.boundary_face)
        q_new = _regular(el.boundary or er.boundary)
        k_new = abs(v_new - q_new)
        k_max = max(abs(el.valence - el.regular_valence), abs(er.valence - er.regular_valence))
        total += T(k_max - k_new)
    km = sum(abs(c.valence - _regular(c.boundary)) for c in _whole_chains_in_middle(bc, sheet))
    return (dm - beta * (total + km)) / dm


def _fshape_all(mesh):
    return shape_metrics(mesh.vertices[mesh.hexes])


def sheet_distortion_term(mesh, sheet, d0=0.55, fshape=None):
    """E_sq = 1 / ln(sum f_i + e) from central differences of f_shape."""
    f = _fshape_all(mesh) if fshape is None else fshape
    members = set(int(h) for h in sheet.hexes)
    acc = 0.0
    for h in sheet.hexes:
        d = 0.0
        for a, b in OPPOSITE_FACES:
            nb = []
            for k in (a, b):
                face = mesh.hex_faces[h, k]
                o = [int(x) for x in mesh.face_hexes[face] if x != h and x >= 0]
                nb.append(o[0] if o and o[0] in members else None)
            if nb[0] is not None and nb[1] is not None:
                diff = abs(f[nb[0]] + f[nb[1]] - 2 * f[h])
            elif nb[0] is not None or nb[1] is not None:
                diff = abs(f[nb[0] if nb[0] is not None else nb[1]] - f[h])
            else:
                diff = 0.0
            d = max(d, diff)
        if d >= d0:
            acc += d
    return 1.0 / math.log(acc + math.e)


def sheet_width_term(mesh, sheet, alpha_a=0.7, alpha_b=0.3, mean_length=None):
    L = mean_edge_length(mesh) if mean_length is None else mean_length
    widths = np.array([w for _, _, w in sheet.vertex_pairs])
    return float(((alpha_a * widths.min() + alpha_b * widths.mean()) / L) ** (1.0 / 3.0))


def sheet_rank(terms, w):
    """E_s from the (E_sv, E_sq, E_sd) terms, each clamped into (0, 2)."""
    sv, sq, sd = (_clamp(terms[k]) for k in ("E_sv", "E_sq", "E_sd"))
    return (w.k_sq * (1 - math.exp(-sq)) + w.k_sd * (1 - math.exp(-sd))
            + w.k_sv * (1 - math.exp(-sv)))


# ---------------------------------------------------------------------------
# chords


def _corner_point(bc, block, label, t):
    comp = bc.components[block.component]
    line = block.groups[label]["line"]
    return bc.mesh.vertices[line[t]]


def chord_geometry_term(mesh, bc, chord, curvature=None, mean_length=None):
    """E_cq: mean edge length times L1/L2 times the std of boundary Gaussian curvature."""
    curvature = gaussian_curvatures(mesh) if curvature is None else curvature
    L = mean_edge_length(mesh) if mean_length is None else mean_length
    pairing, _ = chord_direction(chord)
    p1, p2, l, r = chord.pairing(pairing)
    main, sub = [], []
    for b in chord.blocks:
        for t in (0, -1):
            main.append(np.linalg.norm(_corner_point(bc, b, l, t) - _corner_point(bc, b, r, t)))
            sub.append(np.linalg.norm(_corner_point(bc, b, p1, t) - _corner_point(bc, b, p2, t)))
    L1, L2 = float(np.mean(main)), float(np.mean(sub))
    if L2 <= 0:
        raise ValueError("degenerate chord")
    verts = np.unique(mesh.hexes[chord.hexes])
    q = np.array([curvature[int(v)] for v in verts if mesh.boundary_vertex[v]])
    if len(q) < 2:
        return 0.0
    return float(L * L1 / L2 * q.std(ddof=1))


def chord_valence_term(chord, beta=1.67):
    _, d = chord_direction(chord)
    return beta * d / (3.0 * chord.k)


def chord_rank(terms, w):
    cq, cv = _clamp(terms["E_cq"]), _clamp(terms["E_cv"])
    return w.k_cq * (1 - math.exp(-cq)) + w.k_cv * (1 - math.exp(-cv))


# ---------------------------------------------------------------------------
# queues


@dataclass
class QueueEntry:
    kind: str
    id: int
    score: float
    terms: dict
    direction: int = -1

    @property
    def key(self):
        return (self.score, self.id)


@dataclass
class RankedQueue:
    kind: str
    revision: int
    entries: list = field(default_factory=list)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def order(self):
        return [e.id for e in self.entries]

    def check(self, mesh):
        if mesh.revision != self.revision:
            from .collapse import StaleRevisionError
            raise StaleRevisionError(f"queue built for revision {self.revision}")


def effective_weights(bc, w):
    """Polycube-style inputs (every singularity on the boundary) drop the distortion term."""
    chains = bc.singularity.chains
    if w.auto_polycube and chains and all(c.boundary for c in chains):
        return replace(w, k_sq=0.0, k_sd=0.7, k_sv=0.3)
    return w


def build_queues(mesh, bc, sheets, chords, w=None):
    """Filter and score all candidates; returns (sheet queue, chord queue)."""
    w = RankWeights() if w is None else w
    w = effective_weights(bc, w)
    dm = max([len(s.middle_edges) for s in sheets] + [1])
    fshape = _fshape_all(mesh)
    L = mean_edge_length(mesh)
    sq = RankedQueue("sheet", mesh.revision)
    for s in sheets:
        if not can_collapse_sheet(mesh, bc, s):
            continue
        terms = {
            "E_sv": sheet_valence_term(s, bc, dm, w.beta),
            "E_sq": sheet_distortion_term(mesh, s, w.d0, fshape),
            "E_sd": sheet_width_term(mesh, s, w.alpha_a, w.alpha_b, L),
        }
        sq.entries.append(QueueEntry("sheet", s.id, sheet_rank(terms, w), terms))
    curv = None
    cq = RankedQueue("chord", mesh.revision)
    for c in chords:
        v = can_collapse_chord(mesh, bc, c)
        if not v:
            continue
        if curv is None:
            curv = gaussian_curvatures(mesh)
        pairing, _ = v.predicted[0]
        terms = {
            "E_cq": chord_geometry_term(mesh, bc, c, curv, L),
            "E_cv": chord_valence_term(c, w.beta),
        }
        cq.entries.append(QueueEntry("chord", c.id, chord_rank(terms, w), terms, pairing))
    sq.entries.sort(key=lambda e: e.key)
    cq.entries.sort(key=lambda e: e.key)
    return sq, cq


def dump_scores(path, queues, mode="w"):
    """Append candidate scores as CSV rows: id, kind, E_sv, E_sq, E_sd/E_cq, E_cv, total."""
    with open(path, mode, newline="") as fh:
        wr = csv.writer(fh)
        if mode == "w":
            wr.writerow(["revision", "id", "kind", "E_sv", "E_sq", "E_sd_or_E_cq", "E_cv", "total"])
        for q in queues:
            for e in q:
                t = e.terms
                if e.kind == "sheet":
                    row = [t["E_sv"], t["E_sq"], t["E_sd"], ""]
                else:
                    row = ["", "", t["E_cq"], t["E_cv"]]
                wr.writerow([q.revision, e.id, e.kind] + [f"{x:.10g}" if x != "" else "" for x in row]
                            + [f"{e.score:.10g}"])
