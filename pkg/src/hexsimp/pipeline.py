"""Simplification driver: queue building, interleaved collapses, refinement, final smoothing."""

import json
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .base_complex import extract_base_complex, extract_chords, extract_sheets
from .collapse import CollapseContext, collapse_chord, collapse_sheet
from .local_param import build_region, optimize_region
from .mesh import build_mesh, scaled_jacobians, validate, with_detected_features
from .metrics import hausdorff_ratio, snapshot
from .ranking import RankWeights, build_queues, dump_scores, singularity_energy
from .refine import select_refinement_sheet, split_sheet
from .surface import BoundarySurface

CHECKPOINT_VERSION = 1


class InfeasibleInputError(ValueError):
    """The input already violates a hard constraint (e.g. inverted cells)."""


class CheckpointError(ValueError):
    pass


@dataclass
class SimplifyConfig:
    r_h: float = 0.01
    target_elements: float = 1.0        # r_|H|
    target_reduction: float = 0.9       # N_s, component reduction ratio
    weights: RankWeights = field(default_factory=RankWeights)
    feature_angle: float = 60.0
    slim_iterations: int = 5            # final global pass
    local_iterations: int = 50          # per-collapse relocation
    laplace_epsilon: float = 1e-3
    laplace_iterations: int = 50
    beta_ring: int = 4
    chord_cap: int = 3
    samples_per_quad: int = 4
    seed: int = 0
    max_passes: int = 500
    max_refinements: int = 50
    failure_refine_after: int = 2

    def __post_init__(self):
        if isinstance(self.weights, dict):
            self.weights = RankWeights(**self.weights)
        if not 0 < self.r_h <= 0.1:
            raise ValueError("r_h must lie in (0, 0.1]")
        if self.target_elements <= 0:
            raise ValueError("target_elements must be positive")
        if not 0 < self.target_reduction <= 1:
            raise ValueError("target_reduction must lie in (0, 1]")
        if self.beta_ring < 1 or self.chord_cap < 0 or self.slim_iterations < 0:
            raise ValueError("invalid iteration or ring settings")

    def to_dict(self):
        d = asdict(self)
        d["weights"] = asdict(self.weights)
        return d

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})

    def context(self, surface):
        return CollapseContext(
            surface=surface, r_h=self.r_h, beta=self.beta_ring,
            slim_iterations=self.local_iterations, laplace_epsilon=self.laplace_epsilon,
            laplace_iterations=self.laplace_iterations, samples_per_quad=self.samples_per_quad,
            chord_threshold=self.weights.c0,
        )


@dataclass
class SimplifyReport:
    records: list
    initial: dict
    final: dict
    reduction_ratio: float
    wall_time: float
    passes: int
    termination: str
    config: dict

    def to_dict(self):
        return asdict(self)

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


@dataclass
class _State:
    mesh: object
    input_quads: np.ndarray
    h_in: int
    bc_in: int
    passes: int = 0
    refinements: int = 0
    records: list = field(default_factory=list)
    failures: dict = field(default_factory=dict)
    initial: dict = None
    done: bool = False
    termination: str = ""


def _sheet_key(mesh, sheet):
    c = mesh.vertices[mesh.hexes[sheet.hexes]].mean(axis=(0, 1))
    return f"{len(sheet.hexes)}:" + ",".join(f"{x:.6f}" for x in c)


def prepare_input(mesh, cfg):
    report = validate(mesh)
    if report.inverted_cells:
        raise InfeasibleInputError(f"input has {len(report.inverted_cells)} inverted cells")
    if not report.clean:
        raise ValueError("input mesh is not a valid manifold hex mesh")
    if not mesh.feature_edge.any() and not mesh.feature_vertex.any():
        mesh = with_detected_features(mesh, cfg.feature_angle)
    return mesh


def _record(state, bc, kind, target, status, reason, surface):
    m = state.mesh
    state.records.append({
        "pass": state.passes, "kind": kind, "id": int(target), "outcome": status,
        "reason": reason, "n_hexes": int(m.n_hexes), "n_components": int(bc.n_components),
        "energy": singularity_energy(bc),
        "hr": hausdorff_ratio(BoundarySurface.from_mesh(m), surface, 4),
    })


def _candidates(sq, cq, cap):
    k_s, k_c = len(sq), len(cq)
    lead = min(k_c // k_s, cap) if k_s else min(k_c, cap)
    chords = list(cq)
    return chords[:lead] + list(sq) + chords[lead:]


def _refine(state, cfg, surface, bc, sheets, trigger, failed=None):
    if state.refinements >= cfg.max_refinements:
        return False
    plan = select_refinement_sheet(state.mesh, sheets, trigger, surface, state.h_in, failed,
                                   cfg.samples_per_quad)
    if plan.empty:
        return False
    state.mesh = split_sheet(state.mesh, plan.edge, surface)
    state.refinements += 1
    _record(state, extract_base_complex(state.mesh), "refine", plan.sheet, "success", trigger,
            surface)
    return True


def _pass(state, cfg, surface, ctx, score_path):
    mesh = state.mesh
    bc = extract_base_complex(mesh)
    ratio = 1.0 - bc.n_components / state.bc_in
    if bc.n_components == 1 or ratio >= cfg.target_reduction:
        state.done, state.termination = True, "target reached"
        return
    sheets = extract_sheets(bc)
    if mesh.n_hexes < cfg.target_elements * state.h_in:
        if _refine(state, cfg, surface, bc, sheets, "element_count"):
            return
    chords = extract_chords(bc)
    sq, cq = build_queues(mesh, bc, sheets, chords, cfg.weights)
    if score_path:
        dump_scores(score_path, [sq, cq], "a")
    hausdorff_fail = False
    for entry in _candidates(sq, cq, cfg.chord_cap):
        if entry.kind == "sheet":
            out = collapse_sheet(mesh, bc, sheets[entry.id], ctx)
        else:
            out = collapse_chord(mesh, bc, chords[entry.id], ctx)
        if out.success:
            state.mesh = out.mesh
            _record(state, extract_base_complex(out.mesh), entry.kind, entry.id, out.status,
                    out.reason, surface)
            return
        _record(state, bc, entry.kind, entry.id, out.status, out.reason, surface)
        if out.status != "rolled_back":
            continue
        hausdorff_fail |= out.reason == "hausdorff"
        if entry.kind == "sheet":
            key = _sheet_key(mesh, sheets[entry.id])
            state.failures[key] = state.failures.get(key, 0) + 1
            if state.failures[key] >= cfg.failure_refine_after:
                state.failures[key] = 0
                if _refine(state, cfg, surface, bc, sheets, "collapse_failure",
                           sheets[entry.id]):
                    return
    if hausdorff_fail and _refine(state, cfg, surface, bc, sheets, "hausdorff"):
        return
    state.done, state.termination = True, "no admissible operation"


def _final_optimize(mesh, cfg, surface):
    if cfg.slim_iterations == 0:
        return mesh
    region = build_region(mesh, hexes=np.arange(mesh.n_hexes))
    res = optimize_region(mesh, region, surface, max_outer=cfg.slim_iterations)
    if not res.success:
        return mesh
    out = mesh.with_positions(res.positions)
    if (scaled_jacobians(out) <= 0).any():
        return mesh
    if hausdorff_ratio(BoundarySurface.from_mesh(out), surface, cfg.samples_per_quad) > cfg.r_h:
        return mesh
    return out


def _loop(state, cfg, checkpoint=None, score_path=None, stop_after=None):
    surface = BoundarySurface(state.input_quads)
    ctx = cfg.context(surface)
    ran = 0
    while not state.done:
        if state.passes >= cfg.max_passes:
            state.done, state.termination = True, "pass limit"
            break
        if stop_after is not None and ran >= stop_after:
            break
        _pass(state, cfg, surface, ctx, score_path)
        state.passes += 1
        ran += 1
        if checkpoint:
            save_checkpoint(checkpoint, state, cfg)
    return surface


def _finish(state, cfg, surface, t0):
    mesh = _final_optimize(state.mesh, cfg, surface)
    state.mesh = mesh
    bc = extract_base_complex(mesh)
    final = snapshot(mesh, surface, bc.n_components, cfg.samples_per_quad).to_dict()
    return mesh, SimplifyReport(
        records=state.records, initial=state.initial, final=final,
        reduction_ratio=1.0 - bc.n_components / state.bc_in,
        wall_time=time.perf_counter() - t0, passes=state.passes,
        termination=state.termination, config=cfg.to_dict(),
    )


def run(mesh, cfg=None, checkpoint=None, score_path=None, stop_after=None):
    """Simplify ``mesh``; returns (mesh, SimplifyReport).

    ``stop_after`` limits the number of passes (the state is left in the
    checkpoint for :func:`resume`); the returned report is then partial.
    """
    cfg = SimplifyConfig() if cfg is None else cfg
    t0 = time.perf_counter()
    mesh = prepare_input(mesh, cfg)
    surface = BoundarySurface.from_mesh(mesh)
    bc = extract_base_complex(mesh)
    state = _State(mesh=mesh, input_quads=surface.quads, h_in=mesh.n_hexes,
                   bc_in=bc.n_components)
    state.initial = snapshot(mesh, surface, bc.n_components, cfg.samples_per_quad).to_dict()
    if score_path:
        open(score_path, "w").close()
        dump_scores(score_path, [], "w")
    surface = _loop(state, cfg, checkpoint, score_path, stop_after)
    if not state.done:
        return state.mesh, None
    return _finish(state, cfg, surface, t0)


def resume(path, cfg=None, checkpoint=None, score_path=None):
    """Continue a run from a checkpoint; ``cfg`` overrides the stored configuration."""
    state, stored = load_checkpoint(path)
    cfg = stored if cfg is None else cfg
    if cfg.r_h != stored.r_h or cfg.target_reduction != stored.target_reduction:
        state.done = False
    t0 = time.perf_counter()
    surface = _loop(state, cfg, checkpoint, score_path)
    return _finish(state, cfg, surface, t0)


# ---------------------------------------------------------------------------
# checkpoints


def _mesh_to_dict(mesh):
    fe = mesh.edges[mesh.feature_edge].tolist()
    return {
        "vertices": [[float(x) for x in v] for v in mesh.vertices],
        "hexes": mesh.hexes.tolist(),
        "feature_vertices": np.flatnonzero(mesh.feature_vertex).tolist(),
        "feature_edges": fe,
        "revision": int(mesh.revision),
    }


def _mesh_from_dict(d):
    m = build_mesh(d["vertices"], d["hexes"], d["revision"])
    fv = np.zeros(m.n_vertices, dtype=bool)
    fv[d["feature_vertices"]] = True
    fe = np.zeros(len(m.edges), dtype=bool)
    for a, b in d["feature_edges"]:
        fe[m.edge_id(a, b)] = True
    return m.with_features(fe, fv)


def save_checkpoint(path, state, cfg):
    data = {
        "version": CHECKPOINT_VERSION,
        "config": cfg.to_dict(),
        "mesh": _mesh_to_dict(state.mesh),
        "input_quads": state.input_quads.tolist(),
        "state": {
            "h_in": state.h_in, "bc_in": state.bc_in, "passes": state.passes,
            "refinements": state.refinements, "records": state.records,
            "failures": state.failures, "initial": state.initial, "done": state.done,
            "termination": state.termination,
        },
    }
    with open(path, "w") as fh:
        json.dump(data, fh, sort_keys=True)


def load_checkpoint(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"corrupted checkpoint: {exc}") from None
    if not isinstance(data, dict) or data.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError("checkpoint version mismatch")
    try:
        cfg = SimplifyConfig.from_dict(data["config"])
        s = data["state"]
        state = _State(mesh=_mesh_from_dict(data["mesh"]),
                       input_quads=np.array(data["input_quads"], dtype=float),
                       h_in=s["h_in"], bc_in=s["bc_in"], passes=s["passes"],
                       refinements=s["refinements"], records=s["records"],
                       failures=s["failures"], initial=s["initial"], done=s["done"],
                       termination=s["termination"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"corrupted checkpoint: {exc}") from None
    return state, cfg
