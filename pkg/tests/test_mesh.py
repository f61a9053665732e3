import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hexsimp import fixtures as F
from hexsimp.mesh import (
    HEX_EDGES, MeshError, build_mesh, corner_jacobians, detect_features, edge_valence,
    f_shape, hex_volumes, irregular_edges, is_regular_edge, scaled_jacobian, shape_metrics,
    singular_edges, validate, with_detected_features,
)

UNIT = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
                 [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]], dtype=float)


def _grid_counts(n):
    # brute-force enumeration of unit edges and faces of the structured grid
    pts = set(itertools.product(range(n + 1), repeat=3))
    edges = sum(1 for p in pts for d in range(3)
                if tuple(p[i] + (i == d) for i in range(3)) in pts)
    faces = 0
    for p in pts:
        for d in range(3):
            a, b = [i for i in range(3) if i != d]
            q = list(p)
            q[a] += 1
            q[b] += 1
            if tuple(q) in pts:
                faces += 1
    return edges, faces


def test_cube2_counts():
    m = F.cube_mesh(2)
    assert (m.n_vertices, m.n_hexes) == (27, 8)
    assert (len(m.edges), len(m.faces)) == _grid_counts(2) == (54, 36)


def test_single_hex_all_boundary():
    m = build_mesh(UNIT, [range(8)])
    assert len(m.edges) == 12 and len(m.faces) == 6
    assert m.boundary_face.all() and m.boundary_edge.all()


def test_empty_mesh_rejected():
    with pytest.raises(MeshError, match="empty mesh"):
        build_mesh(UNIT, np.zeros((0, 8), dtype=int))


def test_validate_cases(cube3):
    assert validate(cube3).clean
    assert validate(F.two_hex_doublet()).doublets == [(0, 1)]
    pts = UNIT.copy()
    pts[6] = 2 * pts.mean(axis=0) - pts[6]      # reflect one corner through the centre
    assert validate(build_mesh(pts, [range(8)])).inverted_cells == [0]


def test_edge_valences(cube3):
    m = cube3
    v = {edge_valence(m, e) for e in range(len(m.edges))}
    assert v == {1, 2, 4}
    centre = np.flatnonzero(~m.boundary_edge)[0]
    assert edge_valence(m, centre) == 4
    corner = [e for e in range(len(m.edges)) if edge_valence(m, e) == 1]
    assert len(corner) == 12 * 3
    assert sum(m.boundary_edge[e] and edge_valence(m, e) == 2 for e in range(len(m.edges))) == 72


def test_regularity(cube3, cube3_features, val3):
    corner = next(e for e in range(len(cube3.edges)) if edge_valence(cube3, e) == 1)
    assert not is_regular_edge(cube3, corner)
    assert is_regular_edge(cube3_features, corner)
    centre = val3.edge_id(0, 7)
    assert edge_valence(val3, centre) == 3 and not is_regular_edge(val3, centre)
    assert not singular_edges(cube3_features).any()
    assert irregular_edges(cube3_features).sum() == 36


def test_scaled_jacobian_cases():
    assert scaled_jacobian(build_mesh(UNIT, [range(8)]), 0) == (pytest.approx(1.0), False)
    sheared = UNIT.copy()
    sheared[[3, 2, 7, 6], 0] += np.cos(np.radians(60))
    sheared[[3, 2, 7, 6], 1] = np.sin(np.radians(60))
    sj, _ = scaled_jacobian(build_mesh(sheared, [range(8)]), 0)
    # corner 0 frame by triple product
    e1, e2, e3 = sheared[1] - sheared[0], sheared[3] - sheared[0], sheared[4] - sheared[0]
    ref = np.dot(np.cross(e1, e2), e3) / np.prod([np.linalg.norm(e) for e in (e1, e2, e3)])
    assert sj == pytest.approx(ref) and sj < 1
    bad = UNIT.copy()
    bad[:4, 2], bad[4:, 2] = 1.0, 0.0
    sj, _ = corner_jacobians(bad[None])
    assert sj.min() < 0


def test_f_shape_cases():
    m = build_mesh(UNIT, [range(8)])
    assert f_shape(m, 0) == pytest.approx(1.0, abs=1e-12)
    assert shape_metrics((UNIT * 7.3)[None])[0] == pytest.approx(1.0, abs=1e-10)
    pts = UNIT.copy()
    pts[6] = pts[7]
    assert shape_metrics(pts[None])[0] == 0.0


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 100), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3),
       st.floats(0, 2 * np.pi))
def test_f_shape_similarity_invariant(s, tx, ty, tz, theta):
    rng = np.random.default_rng(0)
    pts = UNIT + rng.uniform(-0.15, 0.15, UNIT.shape)
    c, sn = np.cos(theta), np.sin(theta)
    R = np.array([[c, -sn, 0], [sn, c, 0], [0, 0, 1]])
    moved = s * pts @ R.T + [tx, ty, tz]
    assert shape_metrics(moved[None])[0] == pytest.approx(shape_metrics(pts[None])[0], abs=1e-10)


def test_hex_volume_of_grid():
    m = F.grid_mesh(2, spacing=0.5)
    assert np.allclose(hex_volumes(m.vertices[m.hexes]), 0.125)


def test_feature_detection(cube3, ball):
    fe, fv = detect_features(cube3, 60)
    geometric = [e for e in np.flatnonzero(fe)]
    assert len(geometric) == 12 * 3          # 12 cube edges, 3 mesh edges each
    corners = {i for i, p in enumerate(cube3.vertices) if set(p) <= {0.0, 3.0}}
    assert set(np.flatnonzero(fv)) == corners
    fe, fv = detect_features(ball, 60)
    assert not fe.any()
    with pytest.raises(ValueError, match="degenerate threshold"):
        detect_features(cube3, 0)


def test_with_positions_bumps_revision(cube3):
    m = cube3.with_positions(cube3.vertices + 1)
    assert m.revision == cube3.revision + 1
    assert np.array_equal(m.hexes, cube3.hexes)


def test_hex_edge_table_is_complete():
    assert sorted(tuple(sorted(e)) for e in HEX_EDGES) == sorted(
        (a, b) for a in range(8) for b in range(a + 1, 8)
        if np.abs(UNIT[a] - UNIT[b]).sum() == 1)


def test_detected_features_are_carried(cube3):
    m = with_detected_features(cube3)
    assert m.feature_edge.sum() == 36
