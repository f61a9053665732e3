from types import SimpleNamespace

import numpy as np
import pytest

from hexsimp import fixtures as F
from hexsimp import refine
from hexsimp.base_complex import extract_base_complex, extract_sheets
from hexsimp.collapse import hex_sheet
from hexsimp.mesh import mean_edge_length, validate, with_detected_features
from hexsimp.metrics import hausdorff_ratio
from hexsimp.refine import adjacent_sheets, select_refinement_sheet, sheet_hausdorff, split_sheet
from hexsimp.surface import BoundarySurface


@pytest.fixture(scope="module")
def pillow_sheets():
    m = with_detected_features(F.pillow_mesh())
    return m, extract_sheets(extract_base_complex(m))


def test_sheet_hausdorff_zero_on_input(cube3):
    s = BoundarySurface.from_mesh(cube3)
    for sheet in extract_sheets(extract_base_complex(cube3)):
        assert sheet_hausdorff(cube3, s, sheet) == 0.0


def test_sheet_hausdorff_offset(cube3):
    surface = BoundarySurface.from_mesh(cube3)
    delta = 0.01 * surface.diagonal
    grown = cube3.with_positions(1.5 + (cube3.vertices - 1.5) * (1.5 + delta) / 1.5)
    sheet = SimpleNamespace(hexes=np.arange(27))
    assert sheet_hausdorff(grown, surface, sheet) == pytest.approx(0.01, abs=1e-3)


def test_sheet_hausdorff_interior_sheet_is_zero():
    m = F.pillow_mesh()
    inner = SimpleNamespace(hexes=F.hexes_in_box(m, (1.2,) * 3, (2.8,) * 3))
    assert sheet_hausdorff(m, BoundarySurface.from_mesh(m), inner) == 0.0


def _patched(monkeypatch, hr, lb):
    monkeypatch.setattr(refine, "sheet_hausdorff", lambda m, s_, sh, spq=4: hr.get(sh.id, 0.0))
    monkeypatch.setattr(refine, "collapse_direction_length", lambda m, sh: lb.get(sh.id, 0.0))


def test_select_first_of_top_four(monkeypatch, pillow_sheets):
    m, sheets = pillow_sheets
    ids = [s.id for s in sheets if not s.self_intersecting][:5]
    L = mean_edge_length(m)
    hr = dict(zip(ids, [0.04, 0.03, 0.02, 0.01, 0.0]))
    _patched(monkeypatch, hr, {i: 2 * L for i in ids})
    plan = select_refinement_sheet(m, sheets, "hausdorff", None, c0=10 ** 6)
    assert plan.sheet == ids[0] and plan.trigger == "hausdorff"
    assert plan.edge >= 0


def test_select_fallback_max_length(monkeypatch, pillow_sheets):
    m, sheets = pillow_sheets
    ids = [s.id for s in sheets if not s.self_intersecting][:6]
    L = mean_edge_length(m)
    hr = dict(zip(ids, [0.06, 0.05, 0.04, 0.03, 0.02, 0.01]))
    lb = dict(zip(ids, [L, L, L, L, 1.1 * L, 0.5 * L]))
    _patched(monkeypatch, hr, lb)
    plan = select_refinement_sheet(m, [s for s in sheets if s.id in ids], "element_count", None,
                                   c0=10 ** 6)
    assert plan.sheet == ids[4]


def test_select_respects_cap(monkeypatch, pillow_sheets):
    m, sheets = pillow_sheets
    _patched(monkeypatch, {}, {})
    # cap of 1.5 hexes excludes every layer
    plan = select_refinement_sheet(m, sheets, "element_count", None, c0=m.n_hexes + 1)
    assert plan.empty and plan.cap == pytest.approx(1.5)


def test_select_rejects_unknown_trigger(pillow_sheets):
    m, sheets = pillow_sheets
    with pytest.raises(ValueError):
        select_refinement_sheet(m, sheets, "boredom", None, c0=1)


def test_collapse_failure_candidates_are_adjacent(pillow_sheets):
    m, sheets = pillow_sheets
    failed = sheets[0]
    adj = adjacent_sheets(failed, sheets)
    faces = set(failed.left_faces) | set(failed.right_faces)
    assert adj and all(faces & (set(s.left_faces) | set(s.right_faces)) for s in adj)
    assert failed not in adj


def test_split_cube2_axis_sheet():
    m = F.cube_mesh(2)
    out = split_sheet(m, m.edge_id(0, 1))
    assert out.n_hexes == 12 and validate(out).clean
    assert out.revision == m.revision + 1


def test_split_keeps_meshes_valid_and_hr():
    for m in (F.cube_mesh(3), F.pillow_mesh(), F.crossing_pillow_mesh()):
        s = BoundarySurface.from_mesh(m)
        for e in (0, len(m.edges) // 2, len(m.edges) - 1):
            edges, hexes, self_int = hex_sheet(m, e)
            if self_int:
                continue
            out = split_sheet(m, e, s)
            assert validate(out).clean
            assert out.n_hexes == m.n_hexes + len(hexes)
            assert hausdorff_ratio(out, s) <= hausdorff_ratio(m, s) + 1e-12


def test_split_carries_feature_edges():
    m = with_detected_features(F.cube_mesh(2))
    out = split_sheet(m, m.edge_id(0, 1))
    assert out.feature_edge.sum() == m.feature_edge.sum() + 4
