import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hexsimp import fixtures as F
from hexsimp.mesh import build_mesh
from hexsimp.metrics import angle_defects, gaussian_curvature, hausdorff_ratio, snapshot, vdr
from hexsimp.surface import BoundarySurface, closest_point_on_triangles, quad_samples


def _chain(xs):
    """Hexes along x with the given x-coordinates of the cross sections."""
    verts, hexes = [], []
    for x in xs:
        verts += [(x, 0, 0), (x, 1, 0), (x, 1, 1), (x, 0, 1)]
    for i in range(len(xs) - 1):
        a, b = 4 * i, 4 * (i + 1)
        hexes.append([a, b, b + 1, a + 1, a + 3, b + 3, b + 2, a + 2])
    return build_mesh(np.array(verts, float), hexes)


def test_hausdorff_identical_is_zero(cube3):
    assert hausdorff_ratio(cube3, cube3) == 0.0


def test_hausdorff_translated_unit_cube():
    a = F.cube_mesh(1)
    b = a.with_positions(a.vertices + [0.02, 0, 0])
    assert hausdorff_ratio(b, a) == pytest.approx(0.02 / np.sqrt(3), abs=1e-3)


def test_hausdorff_refined_surface():
    coarse = F.cube_mesh(1)
    fine = F.grid_mesh(3, spacing=1 / 3)
    assert hausdorff_ratio(fine, coarse) == pytest.approx(0.0, abs=1e-12)


def test_closest_point_matches_brute_force():
    rng = np.random.default_rng(3)
    tri = rng.normal(size=(1, 3, 3))
    p = rng.normal(size=(200, 3)) * 2
    q = closest_point_on_triangles(p, *(np.repeat(tri[:, i], 200, axis=0) for i in range(3)))
    # dense barycentric sampling as an upper bound oracle
    u, v = np.meshgrid(np.linspace(0, 1, 301), np.linspace(0, 1, 301))
    m = u + v <= 1
    s = tri[0, 0] + u[m][:, None] * (tri[0, 1] - tri[0, 0]) + v[m][:, None] * (tri[0, 2] - tri[0, 0])
    brute = np.linalg.norm(p[:, None] - s[None], axis=2).min(axis=1)
    d = np.linalg.norm(q - p, axis=1)
    assert (d <= brute + 1e-12).all()
    assert np.allclose(d, brute, atol=5e-3)


def test_surface_projection_on_cube(cube3):
    s = BoundarySurface.from_mesh(cube3)
    q = s.project([[1.5, 1.5, 3.4], [-1.0, 1.0, 1.0], [1.0, 1.2, 0.1]])
    assert np.allclose(q, [[1.5, 1.5, 3.0], [0.0, 1.0, 1.0], [1.0, 1.2, 0.0]])


def test_quad_samples_requires_square():
    with pytest.raises(ValueError):
        quad_samples(np.zeros((1, 4, 3)), 3)


def test_vdr_uniform_grid_is_zero(cube3):
    per, avdr, mvdr = vdr(cube3)
    assert np.allclose(per, 0) and avdr == 0 and mvdr == 0


def test_vdr_one_doubled_cell():
    per, avdr, mvdr = vdr(_chain([0, 1, 3, 4]))
    # volumes 1, 2, 1 with mean 4/3
    assert per[1] == pytest.approx(np.sqrt(2) / 4)
    assert per[0] == pytest.approx(3 / 8) and per[2] == pytest.approx(3 / 8)
    assert avdr <= mvdr


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0.2, 3.0), min_size=2, max_size=6))
def test_avdr_not_above_mvdr(widths):
    _, avdr, mvdr = vdr(_chain(np.concatenate([[0], np.cumsum(widths)])))
    assert avdr <= mvdr + 1e-15


def test_curvature_flat_and_corner(cube3):
    defect, mixed = angle_defects(cube3)
    flat = next(v for v, p in enumerate(cube3.vertices)
                if p[2] == 3 and 0 < p[0] < 3 and 0 < p[1] < 3)
    assert defect[flat] == pytest.approx(0, abs=1e-12)
    assert gaussian_curvature(cube3, flat) == pytest.approx(0, abs=1e-12)
    corner = 0
    assert defect[corner] == pytest.approx(np.pi / 2)
    assert gaussian_curvature(cube3, corner) == pytest.approx((np.pi / 2) / 0.75)


def test_gauss_bonnet_on_sphere_like_mesh(ball):
    defect, _ = angle_defects(ball)
    assert sum(defect.values()) == pytest.approx(4 * np.pi, rel=0.01)


def test_gaussian_curvature_rejects_interior(cube3):
    inner = int(np.flatnonzero(~cube3.boundary_vertex)[0])
    with pytest.raises(ValueError):
        gaussian_curvature(cube3, inner)


def test_snapshot_fields(cube3):
    snap = snapshot(cube3, BoundarySurface.from_mesh(cube3), 1).to_dict()
    assert snap["n_hexes"] == 27 and snap["n_components"] == 1
    assert snap["msj"] == pytest.approx(1) and snap["hr"] == 0
