import csv
import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hexsimp import fixtures as F
from hexsimp.base_complex import extract_base_complex, extract_chords, extract_sheets
from hexsimp.collapse import StaleRevisionError
from hexsimp.mesh import build_mesh, with_detected_features
from hexsimp.ranking import (
    RankWeights, T, build_queues, chord_rank, dump_scores, sheet_distortion_term, sheet_rank,
    sheet_valence_term, sheet_width_term,
)


def _chain(n):
    verts = [(x, y, z) for x in range(n + 1) for (y, z) in ((0, 0), (1, 0), (1, 1), (0, 1))]
    hexes = [[4 * i, 4 * i + 4, 4 * i + 5, 4 * i + 1, 4 * i + 3, 4 * i + 7, 4 * i + 6, 4 * i + 2]
             for i in range(n)]
    return build_mesh(np.array(verts, float), hexes)


def test_distortion_term_cases():
    m = _chain(5)
    sheet = SimpleNamespace(hexes=np.arange(5))
    assert sheet_distortion_term(m, sheet, fshape=np.ones(5)) == pytest.approx(1.0)
    # middle cell: |1 + 1 - 2 * 0.6| = 0.8, neighbours 0.4, ends 0
    f = np.array([1, 1, 0.6, 1, 1])
    assert sheet_distortion_term(m, sheet, fshape=f) == pytest.approx(1 / math.log(0.8 + math.e))
    assert sheet_distortion_term(m, sheet, fshape=f) == pytest.approx(0.79493, abs=1e-5)
    # every contribution below the 0.55 cutoff
    f = np.array([1, 1, 0.75, 1, 1])
    assert sheet_distortion_term(m, sheet, fshape=f) == pytest.approx(1.0)


def test_width_term_cases():
    sheet = SimpleNamespace(vertex_pairs=[(0, 1, 1.0)] * 4)
    assert sheet_width_term(None, sheet, mean_length=1.0) == pytest.approx(1.0)
    sheet = SimpleNamespace(vertex_pairs=[(0, 1, 0.5), (0, 1, 1.5)])
    assert sheet_width_term(None, sheet, mean_length=1.0) == pytest.approx(0.65 ** (1 / 3))
    assert sheet_width_term(None, sheet, mean_length=1.0) == pytest.approx(0.8662, abs=1e-4)
    tiny = SimpleNamespace(vertex_pairs=[(0, 1, 1e-12)])
    assert sheet_width_term(None, tiny, mean_length=1.0) < 1e-3


def test_sheet_rank_cases():
    w = RankWeights()
    ones = {"E_sv": 1, "E_sq": 1, "E_sd": 1}
    assert sheet_rank(ones, w) == pytest.approx(1 - math.exp(-1))
    assert sheet_rank({"E_sv": 0, "E_sq": 0, "E_sd": 0}, w) == pytest.approx(0, abs=1e-8)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 1.9), st.floats(0.01, 1.9), st.floats(0.01, 1.9),
       st.sampled_from(["E_sv", "E_sq", "E_sd"]), st.floats(0.001, 0.09))
def test_sheet_rank_monotone(sv, sq, sd, key, bump):
    w = RankWeights()
    t = {"E_sv": sv, "E_sq": sq, "E_sd": sd}
    u = dict(t)
    u[key] += bump
    assert sheet_rank(u, w) > sheet_rank(t, w)


def test_chord_rank_zero_terms():
    assert chord_rank({"E_cq": 0, "E_cv": 0}, RankWeights()) == pytest.approx(0, abs=1e-8)


def test_T_branches():
    assert T(0) == 1 and T(2) == 2 and T(-2) == -1
    assert T(-1) > T(-3)


def _regular_bc(n):
    edges = [SimpleNamespace(valence=4, boundary=False, regular_valence=4)] * 2
    pairs = [SimpleNamespace(left=0, right=1, boundary_face=False)] * n
    bc = SimpleNamespace(edges=edges, singularity=SimpleNamespace(chains=[]))
    return bc, SimpleNamespace(edge_pairs=pairs, collapse_edges=np.zeros(0, dtype=int))


def test_valence_term_all_regular():
    bc, sheet = _regular_bc(5)
    assert sheet_valence_term(sheet, bc, dm=12, beta=1.67) == pytest.approx((12 - 1.67 * 5) / 12)


def test_valence_term_worsening_pair_costs_more():
    bc, sheet = _regular_bc(1)
    base = sheet_valence_term(sheet, bc, dm=4)
    # valence-5 pair whose merged edge would be 6: K^new = 2 > K^max = 1
    bc.edges = [SimpleNamespace(valence=5, boundary=False, regular_valence=4)] * 2
    worse = sheet_valence_term(sheet, bc, dm=4)
    assert worse > base


def test_pillow_sheet_beats_regular_sheet():
    m = with_detected_features(F.pillow_mesh())
    bc = extract_base_complex(m)
    sheets = extract_sheets(bc)
    dm = max(len(s.middle_edges) for s in sheets)
    layer = set(range(64, m.n_hexes))
    s = next(s for s in sheets if set(s.hexes.tolist()) == layer)
    _, reg = _regular_bc(len(s.edge_pairs))
    reg_bc, _ = _regular_bc(0)
    assert sheet_valence_term(s, bc, dm) < sheet_valence_term(reg, reg_bc, dm)


@pytest.fixture(scope="module")
def pillow_state():
    m = with_detected_features(F.pillow_mesh())
    bc = extract_base_complex(m)
    return m, bc, extract_sheets(bc), extract_chords(bc)


def test_pillow_sheet_ranked_first(pillow_state):
    m, bc, sheets, chords = pillow_state
    sq, _ = build_queues(m, bc, sheets, chords)
    first = sheets[sq.order()[0]]
    assert set(first.hexes.tolist()) == set(range(64, m.n_hexes))


def test_queue_determinism_and_scale_invariance():
    m = with_detected_features(F.crossing_pillow_mesh())
    bc = extract_base_complex(m)
    sheets, chords = extract_sheets(bc), extract_chords(bc)
    ref = [q.order() for q in build_queues(m, bc, sheets, chords)]
    for _ in range(4):
        assert [q.order() for q in build_queues(m, bc, sheets, chords)] == ref
    scaled = build_queues(m, bc, sheets, chords, RankWeights().scaled(3.0))
    assert [q.order() for q in scaled] == ref


def test_stale_queue_rejected(pillow_state):
    m, bc, sheets, chords = pillow_state
    sq, _ = build_queues(m, bc, sheets, chords)
    sq.check(m)
    with pytest.raises(StaleRevisionError):
        sq.check(m.with_positions(m.vertices))


def test_weights_validation():
    with pytest.raises(ValueError):
        RankWeights(k_sv=-1)
    with pytest.raises(ValueError):
        RankWeights(alpha_a=0.5, alpha_b=0.3)


def test_dump_scores(tmp_path, pillow_state):
    m, bc, sheets, chords = pillow_state
    queues = build_queues(m, bc, sheets, chords)
    path = tmp_path / "scores.csv"
    dump_scores(path, queues)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["revision", "id", "kind", "E_sv", "E_sq", "E_sd_or_E_cq", "E_cv", "total"]
    assert len(rows) == 1 + sum(len(q) for q in queues)
