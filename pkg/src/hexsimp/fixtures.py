"""Constructive meshes: structured grids, pillowing, small singular configurations.

These are used by the test-suite oracles and the CLI demo command.
"""

import numpy as np

from .mesh import HEX_FACES, build_mesh
from .surface import BoundarySurface


def grid_mesh(nx, ny=None, nz=None, spacing=1.0, origin=(0.0, 0.0, 0.0)):
    """Structured ``nx * ny * nz`` block of cubes (x index fastest)."""
    ny = nx if ny is None else ny
    nz = nx if nz is None else nz
    xs = np.arange(nx + 1) * spacing + origin[0]
    ys = np.arange(ny + 1) * spacing + origin[1]
    zs = np.arange(nz + 1) * spacing + origin[2]
    Z, Y, X = np.meshgrid(zs, ys, xs, indexing="ij")
    verts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)

    def vid(i, j, k):
        return (k * (ny + 1) + j) * (nx + 1) + i

    hexes = []
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                hexes.append([
                    vid(i, j, k), vid(i + 1, j, k), vid(i + 1, j + 1, k), vid(i, j + 1, k),
                    vid(i, j, k + 1), vid(i + 1, j, k + 1), vid(i + 1, j + 1, k + 1),
                    vid(i, j + 1, k + 1),
                ])
    return build_mesh(verts, hexes)


def cube_mesh(n):
    """M_cube(n): n^3 unit cubes."""
    return grid_mesh(n)


def hexes_in_box(mesh, lo, hi):
    """Hexes whose centroid lies strictly inside the axis-aligned box."""
    c = mesh.vertices[mesh.hexes].mean(axis=1)
    inside = np.all((c > np.asarray(lo)) & (c < np.asarray(hi)), axis=1)
    return np.flatnonzero(inside)


def pillow(mesh, region, thickness=0.3):
    """Insert a layer of hexes between ``region`` and the rest of the mesh.

    Every interior quad on the region's boundary gets a new hex.  The region's
    copies of the interface vertices are offset inwards by ``thickness`` times
    the mean interface edge length (solving for a displacement that moves each
    incident interface quad plane by the same amount); copies on the mesh
    boundary are projected back onto it.  Returns the new mesh.
    """
    region = np.unique(np.asarray(region, dtype=np.int64))
    in_region = np.zeros(mesh.n_hexes, dtype=bool)
    in_region[region] = True

    pillow_quads = []
    for h in region:
        for k in range(6):
            f = mesh.hex_faces[h, k]
            if mesh.boundary_face[f]:
                continue
            other = [x for x in mesh.face_hexes[f] if x != h][0]
            if not in_region[other]:
                pillow_quads.append(mesh.hexes[h][HEX_FACES[k]])
    if not pillow_quads:
        raise ValueError("region has no interior boundary faces")
    pillow_quads = np.array(pillow_quads)
    dup = np.unique(pillow_quads)

    q = mesh.vertices[pillow_quads]
    inward = -np.cross(q[:, 2] - q[:, 0], q[:, 3] - q[:, 1])
    inward /= np.linalg.norm(inward, axis=1, keepdims=True)
    step = thickness * np.linalg.norm(q - np.roll(q, 1, axis=1), axis=2).mean()
    normals_at = {int(v): [] for v in dup}
    for n, loop in zip(inward, pillow_quads):
        for v in loop:
            normals_at[int(v)].append(n)

    verts = mesh.vertices.copy()
    copy_of = {int(v): mesh.n_vertices + i for i, v in enumerate(dup)}
    new_verts = np.empty((len(dup), 3))
    for i, v in enumerate(dup):
        N = np.unique(np.round(np.array(normals_at[int(v)]), 12), axis=0)
        disp = np.linalg.lstsq(N, np.ones(len(N)), rcond=None)[0]
        new_verts[i] = verts[v] + step * disp
    on_bdy = mesh.boundary_vertex[dup]
    if on_bdy.any():
        new_verts[on_bdy] = BoundarySurface.from_mesh(mesh).project(new_verts[on_bdy])
    verts = np.vstack([verts, new_verts])

    hexes = mesh.hexes.copy()
    for h in region:
        hexes[h] = [copy_of.get(int(v), int(v)) for v in hexes[h]]
    extra = [[copy_of[int(v)] for v in loop] + [int(v) for v in loop] for loop in pillow_quads]
    return build_mesh(verts, np.vstack([hexes, np.array(extra)]))


def pillow_mesh(n=4, lo=1, hi=None, thickness=0.3):
    """M_pillow: cube_mesh(n) with the box [lo, hi]^3 pillowed."""
    hi = n - 1 if hi is None else hi
    base = cube_mesh(n)
    return pillow(base, hexes_in_box(base, (lo,) * 3, (hi,) * 3), thickness)


def crossing_pillow_mesh(thickness=(0.3, 0.25)):
    """Two orthogonal plate-shaped pillow sheets crossing inside cube_mesh(5)."""
    base = cube_mesh(5)
    m1 = pillow(base, hexes_in_box(base, (1, 2, 1), (4, 3, 4)), thickness[0])
    return pillow(m1, hexes_in_box(m1, (2, 1, 1), (3, 4, 4)), thickness[1])


def valence3_mesh(height=1.0):
    """Three rhombic hexes around one edge (interior valence 3)."""
    angles = np.radians([90.0, 210.0, 330.0])
    u = np.stack([np.cos(angles), np.sin(angles), np.zeros(3)], axis=1)
    ring = [np.zeros(3)] + [u[k] for k in range(3)] + [u[k] + u[(k + 1) % 3] for k in range(3)]
    ring = np.array(ring)
    verts = np.vstack([ring, ring + [0.0, 0.0, height]])
    hexes = []
    for k in range(3):
        a, b, c = 1 + k, 4 + k, 1 + (k + 1) % 3
        bottom = [0, a, b, c]
        hexes.append(bottom + [v + 7 for v in bottom])
    return build_mesh(verts, hexes)


def ball_mesh(n=6, radius=1.0):
    """Cube grid mapped onto a ball; a smooth genus-0 boundary."""
    m = grid_mesh(n, spacing=2.0 / n, origin=(-1.0, -1.0, -1.0))
    p = m.vertices
    inf = np.abs(p).max(axis=1)
    two = np.linalg.norm(p, axis=1)
    scale = np.where(two > 0, inf / np.where(two > 0, two, 1.0), 0.0)
    return build_mesh(p * scale[:, None] * radius, m.hexes)


def ring_mesh():
    """3x3x1 block with the centre cell removed: a closed ring of hexes."""
    m = grid_mesh(3, 3, 1)
    keep = [h for h in range(m.n_hexes) if h != 4]
    used = np.unique(m.hexes[keep])
    remap = -np.ones(m.n_vertices, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return build_mesh(m.vertices[used], remap[m.hexes[keep]])


def two_hex_doublet():
    """Two hexes glued along two faces (a doublet); topologically invalid."""
    verts = [
        (0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0),
        (0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1),
        (2, 2, 0), (2, 2, 1),
    ]
    h0 = [0, 1, 2, 3, 4, 5, 6, 7]
    # shares face (1,2,6,5) and face (2,3,7,6) with h0
    h1 = [1, 8, 3, 2, 5, 9, 7, 6]
    return build_mesh(verts, [h0, h1])


def nested_pillow_mesh(n=6, levels=2, thickness=0.3):
    """cube_mesh(n) pillowed around the boxes [k, n-k]^3 for k = 1..levels."""
    m = cube_mesh(n)
    for k in range(1, levels + 1):
        m = pillow(m, hexes_in_box(m, (k,) * 3, (n - k,) * 3), thickness)
    return m


def multi_pillow_mesh(n, boxes, thickness=0.3):
    """cube_mesh(n) with each (lo, hi) box pillowed in turn."""
    m = cube_mesh(n)
    for lo, hi in boxes:
        m = pillow(m, hexes_in_box(m, lo, hi), thickness)
    return m


def corner_pillow_mesh():
    """cube_mesh(4) with a corner box pillowed; the sheet meets the cube's creases."""
    return multi_pillow_mesh(4, [((0, 0, 0), (2, 2, 2))])


def pillow_suite():
    """Named fixtures whose inserted sheets stay clear of boundary creases."""
    return {
        "pillow": pillow_mesh(),
        "pillow_n5": pillow_mesh(n=5, lo=1, hi=3),
        "pillow_n5_wide": pillow_mesh(n=5, lo=1, hi=4),
        "pillow_cell": pillow_mesh(n=3, lo=1, hi=2),
        "pillow_n6": pillow_mesh(n=6, lo=2, hi=4),
        "slab": multi_pillow_mesh(5, [((1, 1, 1), (4, 3, 2))]),
        "nested": nested_pillow_mesh(),
        "two_boxes": multi_pillow_mesh(5, [((0.5, 0.5, 0.5), (2, 2, 2)),
                                           ((3, 3, 3), (4.5, 4.5, 4.5))]),
        "three_boxes": multi_pillow_mesh(7, [((1, 1, 1), (2, 2, 2)), ((4, 1, 1), (6, 3, 3)),
                                             ((1, 4, 4), (3, 6, 6))]),
        "pillow_thin": pillow_mesh(thickness=0.15),
        "offset_box": multi_pillow_mesh(6, [((2, 1, 1), (5, 4, 3))]),
        "nested3": nested_pillow_mesh(8, 3),
        "four_boxes": multi_pillow_mesh(6, [((1, 1, 1), (2, 2, 2)), ((4, 4, 1), (5, 5, 2)),
                                            ((1, 4, 4), (2, 5, 5)), ((4, 1, 4), (5, 2, 5))]),
        "crossing": crossing_pillow_mesh(),
    }
