"""Whole-mesh fidelity and uniformity metrics."""

from dataclasses import asdict, dataclass

import numpy as np

from .mesh import hex_volumes, mesh_jacobian_stats, outward_boundary_quads
from .surface import BoundarySurface


@dataclass
class MetricsSnapshot:
    n_hexes: int
    n_components: int
    msj: float
    asj: float
    std: float
    hr: float
    avdr: float
    mvdr: float

    def to_dict(self):
        return asdict(self)


def _as_surface(s):
    if isinstance(s, BoundarySurface):
        return s
    return BoundarySurface.from_mesh(s)


def hausdorff_ratio(surface_a, surface_b, samples_per_quad=4):
    """Symmetric sampled Hausdorff distance over the bbox diagonal of ``surface_b``.

    Either argument may be a :class:`BoundarySurface` or a mesh.
    """
    a = _as_surface(surface_a)
    b = _as_surface(surface_b)
    d_ab = b.distances(a.samples(samples_per_quad)).max()
    d_ba = a.distances(b.samples(samples_per_quad)).max()
    return float(max(d_ab, d_ba) / b.diagonal)


def face_neighbors(mesh):
    nbrs = [[] for _ in range(mesh.n_hexes)]
    for a, b in mesh.face_hexes[~mesh.boundary_face]:
        nbrs[a].append(int(b))
        nbrs[b].append(int(a))
    return nbrs


def vdr(mesh):
    """Per-element volume deviation ratio and its (mean, max).

    VDR(e) is the population standard deviation of the volumes of e and its
    face neighbours, divided by the mean element volume of the whole mesh.
    """
    vol = hex_volumes(mesh.vertices[mesh.hexes])
    if (vol <= 0).any():
        raise ValueError(f"non-positive volume in hexes {np.flatnonzero(vol <= 0).tolist()}")
    mean = vol.mean()
    out = np.empty(mesh.n_hexes)
    for h, nb in enumerate(face_neighbors(mesh)):
        out[h] = vol[[h] + nb].std() / mean
    return out, float(out.mean()), float(out.max())


def _angle(p, a, b):
    u, v = a - p, b - p
    c = np.einsum("qj,qj->q", u, v)
    n = np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1)
    return np.arccos(np.clip(c / np.maximum(n, 1e-300), -1.0, 1.0))


def _corner_angles(quads):
    """Corner angles of quads (q, 4, 3) measured on their 0-2 diagonal split.

    Planar quads get their ordinary interior angles; skew quads get angles
    that still sum to 2 pi, so Gauss-Bonnet holds on closed surfaces.
    """
    p0, p1, p2, p3 = (quads[:, i] for i in range(4))
    return np.stack([
        _angle(p0, p1, p2) + _angle(p0, p2, p3),
        _angle(p1, p2, p0),
        _angle(p2, p0, p1) + _angle(p2, p3, p0),
        _angle(p3, p0, p2),
    ], axis=1)


def _quad_areas(quads):
    return 0.5 * np.linalg.norm(np.cross(quads[:, 2] - quads[:, 0], quads[:, 3] - quads[:, 1]),
                                axis=1)


def angle_defects(mesh):
    """Angle defect and mixed area for every boundary vertex (dicts keyed by vertex)."""
    quads = outward_boundary_quads(mesh)
    pts = mesh.vertices[quads]
    ang = _corner_angles(pts)
    area = _quad_areas(pts)
    defect = {}
    mixed = {}
    for q, loop in enumerate(quads):
        for k, v in enumerate(loop):
            v = int(v)
            defect[v] = defect.get(v, 2 * np.pi) - ang[q, k]
            mixed[v] = mixed.get(v, 0.0) + area[q] / 4.0
    return defect, mixed


def gaussian_curvature(mesh, vertex, _cache=None):
    """Angle defect over mixed area (a quarter of the incident boundary quad areas)."""
    if not mesh.boundary_vertex[vertex]:
        raise ValueError(f"vertex {vertex} is not on the boundary")
    defect, mixed = _cache if _cache is not None else angle_defects(mesh)
    return float(defect[vertex] / mixed[vertex])


def gaussian_curvatures(mesh):
    defect, mixed = angle_defects(mesh)
    return {v: defect[v] / mixed[v] for v in defect}


def snapshot(mesh, input_surface, n_components, samples_per_quad=4):
    msj, asj, std = mesh_jacobian_stats(mesh)
    _, avdr, mvdr = vdr(mesh)
    hr = hausdorff_ratio(BoundarySurface.from_mesh(mesh), input_surface, samples_per_quad)
    return MetricsSnapshot(
        n_hexes=int(mesh.n_hexes), n_components=int(n_components), msj=msj, asj=asj,
        std=std, hr=hr, avdr=avdr, mvdr=mvdr,
    )
