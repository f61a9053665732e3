"""Triangulated boundary surface with exact closest-point queries."""

import numpy as np
from scipy.spatial import cKDTree

from .mesh import bbox_diagonal, outward_boundary_quads


def closest_point_on_triangles(p, a, b, c):
    """Closest points on triangles (a, b, c) to points p; all arrays (k, 3).

    Region-based method from Ericson, Real-Time Collision Detection, 5.1.5.
    """
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = p - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = p - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)

    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    with np.errstate(divide="ignore", invalid="ignore"):
        denom = va + vb + vc
        v = np.where(denom != 0, vb / denom, 0.0)
        w = np.where(denom != 0, vc / denom, 0.0)
        out = a + ab * v[:, None] + ac * w[:, None]

        # edge bc
        m = (va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0)
        t = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        out = np.where(m[:, None], b + (c - b) * t[:, None], out)
        # edge ac
        m = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
        t = d2 / (d2 - d6)
        out = np.where(m[:, None], a + ac * t[:, None], out)
        # edge ab
        m = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
        t = d1 / (d1 - d3)
        out = np.where(m[:, None], a + ab * t[:, None], out)
    # vertex regions
    out = np.where(((d6 >= 0) & (d5 <= d6))[:, None], c, out)
    out = np.where(((d3 >= 0) & (d4 <= d3))[:, None], b, out)
    out = np.where(((d1 <= 0) & (d2 <= 0))[:, None], a, out)
    return out


def quad_samples(points, samples_per_quad=4):
    """Bilinear lattice samples on quads (q, 4, 3); samples_per_quad must be a square."""
    n = int(round(np.sqrt(samples_per_quad)))
    if n * n != samples_per_quad or n < 1:
        raise ValueError("samples_per_quad must be a perfect square")
    t = (np.arange(n) + 0.5) / n
    u, v = np.meshgrid(t, t, indexing="ij")
    u = u.ravel()[None, :, None]
    v = v.ravel()[None, :, None]
    p0, p1, p2, p3 = (points[:, i][:, None, :] for i in range(4))
    s = (1 - u) * (1 - v) * p0 + u * (1 - v) * p1 + u * v * p2 + (1 - u) * v * p3
    return s.reshape(-1, 3)


class BoundarySurface:
    """Static triangulation of a quad boundary, built once and queried many times."""

    def __init__(self, quad_points):
        quads = np.asarray(quad_points, dtype=float).reshape(-1, 4, 3)
        if len(quads) == 0:
            raise ValueError("empty surface")
        self.quads = quads
        tri = np.concatenate([quads[:, [0, 1, 2]], quads[:, [0, 2, 3]]])
        self.triangles = tri
        self.centroids = tri.mean(axis=1)
        self.radius = np.linalg.norm(tri - self.centroids[:, None, :], axis=2).max(axis=1)
        self.max_radius = float(self.radius.max())
        self.tree = cKDTree(self.centroids)
        self.diagonal = bbox_diagonal(quads.reshape(-1, 3))

    @classmethod
    def from_mesh(cls, mesh):
        return cls(mesh.vertices[outward_boundary_quads(mesh)])

    def closest_points(self, points):
        """Exact closest points on the surface; returns (points, distances)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if len(points) == 0:
            return points.copy(), np.zeros(0)
        d0, _ = self.tree.query(points)
        # any triangle closer than the nearest centroid has its centroid within this ball
        cand = self.tree.query_ball_point(points, d0 + self.max_radius + 1e-12)
        counts = np.array([len(c) for c in cand])
        owner = np.repeat(np.arange(len(points)), counts)
        tri = self.triangles[np.concatenate([np.asarray(c, dtype=np.int64) for c in cand])]
        q = closest_point_on_triangles(points[owner], tri[:, 0], tri[:, 1], tri[:, 2])
        d = np.linalg.norm(q - points[owner], axis=1)
        order = np.lexsort((d, owner))
        first = order[np.concatenate([[0], np.cumsum(counts)[:-1]])]
        return q[first], d[first]

    def distances(self, points):
        return self.closest_points(points)[1]

    def project(self, points):
        return self.closest_points(points)[0]

    def samples(self, samples_per_quad=4):
        return quad_samples(self.quads, samples_per_quad)
