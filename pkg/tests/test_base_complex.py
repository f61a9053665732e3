import numpy as np
import pytest

from hexsimp import fixtures as F
from hexsimp.base_complex import extract_base_complex, extract_chords, extract_sheets, \
    extract_singularity
from hexsimp.collapse import chord_direction, hex_sheet
from hexsimp.mesh import edge_valence, with_detected_features
from hexsimp.ranking import build_queues, singularity_energy


@pytest.fixture(scope="module")
def pillow_parts():
    base = F.cube_mesh(4)
    region = F.hexes_in_box(base, (1, 1, 1), (3, 3, 3))
    m = with_detected_features(F.pillow(base, region))
    return base, region, m


def test_cube_has_no_chains(cube3_features):
    assert extract_singularity(cube3_features).chains == []


def test_val3_one_chain(val3):
    s = extract_singularity(with_detected_features(val3, 45))
    assert len(s.chains) == 1
    assert s.chains[0].valence == 3
    assert s.chains[0].edges == (val3.edge_id(0, 7),)


def test_pillow_loops_match_pillowing(pillow_parts):
    base, region, m = pillow_parts
    s = extract_singularity(m)
    by_val = {}
    for c in s.chains:
        by_val.setdefault(c.valence, []).append(c)
    assert sorted(by_val) == [3, 5]
    # 12 box edges on the original vertices (valence 5), 12 on the copies (valence 3) and one
    # valence-3 edge per box corner joining the original vertex to its copy
    assert len(by_val[5]) == 12 and len(by_val[3]) == 20
    on_box_edge = lambda p: sum(np.isclose(p, 1) | np.isclose(p, 3)) >= 2
    for c in by_val[5]:
        assert len(c.edges) == 2
        assert all(v < base.n_vertices and on_box_edge(m.vertices[v]) for v in c.vertices)
    copies = [c for c in by_val[3] if all(v >= base.n_vertices for v in c.vertices)]
    connectors = [c for c in by_val[3] if c not in copies]
    assert len(copies) == 12 and all(len(c.edges) == 2 for c in copies)
    assert len(connectors) == 8
    for c in connectors:
        a, b = sorted(c.vertices)
        assert a < base.n_vertices <= b
        assert np.all(np.isclose(base.vertices[a], 1) | np.isclose(base.vertices[a], 3))


def test_component_counts(cube3, val3, pillow_parts):
    bc = extract_base_complex(cube3)
    assert bc.n_components == 1 and bc.components[0].extents == (3, 3, 3)
    assert extract_base_complex(with_detected_features(val3, 45)).n_components == 3
    # six box planes cut the outer shell into 26 blocks, plus the inner box and six pillow slabs
    assert extract_base_complex(pillow_parts[2]).n_components == 26 + 1 + 6


def test_components_partition_hexes(crossing):
    bc = extract_base_complex(crossing)
    hexes = np.concatenate([c.hexes for c in bc.components])
    assert sorted(hexes.tolist()) == list(range(crossing.n_hexes))
    for c in bc.components:
        assert len(c.hexes) == int(np.prod(c.extents))


def test_cube_sheets(cube3):
    bc = extract_base_complex(cube3)
    sheets = extract_sheets(bc)
    assert len(sheets) == 3
    for s in sheets:
        assert s.components == [0] and s.boundary_sided
        assert len(s.hexes) == 27


def test_pillow_sheet_is_the_inserted_layer(pillow_parts):
    base, region, m = pillow_parts
    bc = extract_base_complex(m)
    layer = set(range(base.n_hexes, m.n_hexes))
    matches = [s for s in extract_sheets(bc) if set(s.hexes.tolist()) == layer]
    assert len(matches) == 1
    s = matches[0]
    faces = lambda ids: {f for b in ids for f in bc.faces[b].faces}
    copy = {f for f in range(len(m.faces))
            if all(v >= base.n_vertices for v in m.faces[f])}
    orig = set()
    for h in range(base.n_hexes, m.n_hexes):
        for f in m.hex_faces[h]:
            if all(v < base.n_vertices for v in m.faces[f]):
                orig.add(int(f))
    assert {frozenset(faces(s.left_faces)), frozenset(faces(s.right_faces))} == \
        {frozenset(copy & faces(s.left_faces + s.right_faces)),
         frozenset(orig & faces(s.left_faces + s.right_faces))}
    assert faces(s.left_faces + s.right_faces) == (copy | orig) & faces(s.left_faces + s.right_faces)
    assert len(faces(s.left_faces)) == len(faces(s.right_faces)) == 24


def test_ring_sheet_closed_loop():
    m = F.ring_mesh()
    sheets = extract_sheets(extract_base_complex(m))
    assert any(s.closed_loop for s in sheets)


def test_cube_chords_degenerate_and_queues_empty(cube3):
    bc = extract_base_complex(cube3)
    chords = extract_chords(bc)
    assert all(c.degenerate for c in chords)
    sq, cq = build_queues(cube3, bc, extract_sheets(bc), chords)
    assert len(sq) == 0 and len(cq) == 0


def _crossing_parts():
    base = F.cube_mesh(5)
    m1 = F.pillow(base, F.hexes_in_box(base, (1, 2, 1), (4, 3, 4)), 0.3)
    m = with_detected_features(F.pillow(m1, F.hexes_in_box(m1, (2, 1, 1), (3, 4, 4)), 0.25))

    def layer(ids):
        for e in m.hex_edges[ids[0]]:
            hexes = set(hex_sheet(m, int(e))[1].tolist())
            if set(ids.tolist()) <= hexes:
                return hexes
    overlap = layer(np.arange(base.n_hexes, m1.n_hexes)) & layer(np.arange(m1.n_hexes, m.n_hexes))
    return m, overlap


def test_crossing_intersection_columns_are_closed_chords():
    m, overlap = _crossing_parts()
    assert len(overlap) == 16
    chords = extract_chords(extract_base_complex(m))
    inside = [c for c in chords if set(c.hexes.tolist()) <= overlap]
    # the two pillows cross along two closed columns, each reported as one chord
    assert sum(len(c.hexes) for c in inside) == len(overlap)
    assert set().union(*(set(c.hexes.tolist()) for c in inside)) == overlap
    assert all(c.closed and len(c.hexes) == 8 for c in inside)


def _brute_d(m, bc, chord):
    """D(c) by enumerating both diagonal pairings from mesh-measured valences."""
    best = None
    for sub, main in ((("B", "D"), ("A", "C")), (("A", "C"), ("B", "D"))):
        total = 0
        for b in chord.blocks:
            v, p = {}, {}
            for g in "ABCD":
                be = bc.edges[b.groups[g]["base_edges"][0]]
                v[g] = edge_valence(m, be.edges[0])
                p[g] = 3 if m.boundary_edge[be.edges[0]] else 4
            total += sum(abs(v[g] - p[g] - 1) for g in sub)
            total += abs(v[main[0]] + v[main[1]] - min(p[main[0]], p[main[1]]) - 2)
        best = total if best is None else min(best, total)
    return best


def test_chord_deviation_matches_enumeration():
    m, _ = _crossing_parts()
    bc = extract_base_complex(m)
    chords = [c for c in extract_chords(bc) if not c.degenerate]
    assert chords
    for c in chords:
        assert chord_direction(c)[1] == _brute_d(m, bc, c)


def test_singularity_energy(cube3_features, val3, pillow_parts):
    assert singularity_energy(extract_base_complex(cube3_features)) == 0
    assert singularity_energy(extract_base_complex(with_detected_features(val3, 45))) == 1
    bc = extract_base_complex(pillow_parts[2])
    # one unit per pillowing chain: 12 + 12 + 8
    chains = extract_singularity(pillow_parts[2]).chains
    assert sum(abs(c.valence - 4) for c in chains) == 32
    assert singularity_energy(bc) == 32


def test_edge_and_face_maps_cover_separators(pillow):
    bc = extract_base_complex(with_detected_features(pillow))
    for f in np.flatnonzero(bc.separators):
        assert int(f) in bc.face_of
    for be in bc.edges:
        for e in be.edges:
            assert bc.edge_of[e] == be.id
