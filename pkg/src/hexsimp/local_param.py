"""Local vertex relocation: SLIM-style distortion minimisation and Laplacian smoothing."""

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix, identity
from scipy.sparse.linalg import spsolve

from .mesh import CORNER_LATTICE, FIVE_TETS, corner_jacobians, hex_volumes

# tet corner -> edge-vector operator, W_D = X @ _G for X the (3, 4) tet positions
_G = np.array([[-1.0, -1.0, -1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
_TET_LOCAL = FIVE_TETS.reshape(-1, 4)


@dataclass
class Region:
    hexes: np.ndarray
    vertices: np.ndarray      # all vertices touched by the region hexes
    free: np.ndarray          # V_in: interior, unconstrained
    boundary: np.ndarray      # V_bdy: slide on the input surface
    frozen: np.ndarray        # shell and feature vertices
    interface: np.ndarray     # merged F_L/F_R vertices (held during smoothing)
    tets: np.ndarray          # (t, 4) global vertex ids
    ref_inv: np.ndarray       # (t, 3, 3) inverse reference matrices
    ref_vol: np.ndarray       # (t,)

    @property
    def movable(self):
        return np.concatenate([self.free, self.boundary])


@dataclass
class OptimizeResult:
    positions: np.ndarray
    energies: list = field(default_factory=list)
    success: bool = True
    reason: str = ""


def element_jacobian(W_I, W_D):
    """phi = W_D @ inv(W_I)."""
    W_I = np.asarray(W_I, dtype=float)
    if abs(np.linalg.det(W_I)) < 1e-300:
        raise np.linalg.LinAlgError("singular reference matrix")
    return np.asarray(W_D, dtype=float) @ np.linalg.inv(W_I)


def ring_hexes(mesh, seed_vertices, beta=4):
    """Hexes within ``beta`` vertex-adjacency rings of the seed vertices."""
    inside = np.zeros(mesh.n_hexes, dtype=bool)
    verts = set(int(v) for v in seed_vertices)
    for _ in range(beta):
        new = {h for v in verts for h in mesh.vertex_hexes[v]}
        grown = [h for h in new if not inside[h]]
        if not grown:
            break
        inside[grown] = True
        verts = set(mesh.hexes[grown].ravel().tolist())
    return np.flatnonzero(inside)


def build_region(mesh, seed_vertices=None, beta=4, interface=(), hexes=None, edge_length=None):
    """Assemble the optimisation region around ``seed_vertices``.

    ``hexes`` overrides the ring growth (the whole mesh for a global pass).
    Reference tets come from an ideal cube whose side matches the region's mean
    element volume, or ``edge_length`` if given.
    """
    if hexes is None:
        hexes = ring_hexes(mesh, seed_vertices, beta)
    hexes = np.asarray(hexes, dtype=np.int64)
    in_region = np.zeros(mesh.n_hexes, dtype=bool)
    in_region[hexes] = True
    verts = np.unique(mesh.hexes[hexes])

    frozen = np.zeros(mesh.n_vertices, dtype=bool)
    outside = np.flatnonzero(~in_region)
    if len(outside):
        frozen[np.unique(mesh.hexes[outside])] = True
    frozen |= mesh.feature_vertex
    fe = np.flatnonzero(mesh.feature_edge)
    if len(fe):
        frozen[np.unique(mesh.edges[fe])] = True
    mask = np.zeros(mesh.n_vertices, dtype=bool)
    mask[verts] = True
    fr = mask & frozen
    bd = mask & ~frozen & mesh.boundary_vertex
    fi = mask & ~frozen & ~mesh.boundary_vertex

    if edge_length is None:
        vol = hex_volumes(mesh.vertices[mesh.hexes[hexes]])
        edge_length = float(np.cbrt(max(np.abs(vol).mean(), 1e-300)))
    cube = CORNER_LATTICE.astype(float) * edge_length
    W_I = np.stack([(cube[t[1:]] - cube[t[0]]).T for t in _TET_LOCAL])
    ref_inv = np.linalg.inv(W_I)
    ref_vol = np.linalg.det(W_I) / 6.0
    tets = mesh.hexes[hexes][:, _TET_LOCAL].reshape(-1, 4)
    return Region(
        hexes=hexes, vertices=verts, free=np.flatnonzero(fi), boundary=np.flatnonzero(bd),
        frozen=np.flatnonzero(fr), interface=np.asarray(sorted(set(int(v) for v in interface)),
                                                         dtype=np.int64),
        tets=tets, ref_inv=np.tile(ref_inv, (len(hexes), 1, 1)),
        ref_vol=np.tile(ref_vol, len(hexes)),
    )


def _jacobians(region, X):
    P = X[region.tets]                                   # (t, 4, 3)
    W_D = np.einsum("tkj,ki->tji", P, _G)                # (t, 3, 3) columns = edge vectors
    return W_D @ region.ref_inv


def tet_determinants(region, X):
    return np.linalg.det(_jacobians(region, X))


def energy(region, X):
    """Volume-weighted symmetric Dirichlet energy; inf if any tet is inverted."""
    J = _jacobians(region, X)
    det = np.linalg.det(J)
    if (det <= 0).any():
        return np.inf
    Jinv = np.linalg.inv(J)
    e = (J ** 2).sum(axis=(1, 2)) + (Jinv ** 2).sum(axis=(1, 2))
    return float((region.ref_vol * e).sum())


def energy_gradient(region, X):
    """dE/dX for all vertices (n, 3); zero rows for vertices outside the region."""
    J = _jacobians(region, X)
    Jinv = np.linalg.inv(J)
    JinvT = np.transpose(Jinv, (0, 2, 1))
    dJ = 2.0 * J - 2.0 * JinvT @ Jinv @ JinvT
    dJ *= region.ref_vol[:, None, None]
    B = _G[None] @ region.ref_inv                        # (t, 4, 3)
    dP = np.einsum("tij,tkj->tki", dJ, B)                # (t, 4, 3) gradient per tet corner
    g = np.zeros_like(X)
    np.add.at(g, region.tets.ravel(), dP.reshape(-1, 3))
    return g


def _rotations_and_weights(J, slim=True):
    U, s, Vt = np.linalg.svd(J)
    flip = np.linalg.det(U @ Vt) < 0
    U[flip, :, 2] *= -1
    s = s.copy()
    s[flip, 2] *= -1
    R = U @ Vt
    if not slim:
        return R, np.tile(np.eye(3), (len(J), 1, 1))
    sig = np.clip(np.abs(s), 1e-8, None)
    w = np.sqrt((sig + 1.0) * (sig ** 2 + 1.0) / sig ** 3)
    W = U @ (w[:, :, None] * np.transpose(U, (0, 2, 1)))
    return R, W


def _global_step(region, X, R, W):
    """Weighted least squares for the movable vertices given per-tet targets."""
    mov = region.movable
    if len(mov) == 0 or len(region.tets) == 0:
        return X.copy()
    col = -np.ones(len(X), dtype=np.int64)
    col[mov] = np.arange(len(mov))
    B = _G[None] @ region.ref_inv                        # J = P^T B
    nt = len(region.tets)
    # per tet: W P^T B = W R, one row per entry (a, b)
    rows, cols, vals = [], [], []
    rhs = (W @ R).reshape(nt, 9)
    sw = np.sqrt(region.ref_vol)
    rhs = rhs * sw[:, None]
    for k in range(4):
        vid = region.tets[:, k]
        c = col[vid]
        for a in range(3):           # output row index of J
            for b in range(3):       # output column index of J
                r = np.arange(nt) * 9 + a * 3 + b
                for d in range(3):   # coordinate of the vertex
                    coef = W[:, a, d] * B[:, k, b] * sw
                    m = c >= 0
                    rows.append(r[m])
                    cols.append(c[m] * 3 + d)
                    vals.append(coef[m])
                    fixed = ~m
                    if fixed.any():
                        rhs[fixed, a * 3 + b] -= coef[fixed] * X[vid[fixed], d]
    A = coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                   shape=(nt * 9, len(mov) * 3)).tocsr()
    # small proximal term keeps vertices outside every region tet where they are
    AtA = (A.T @ A).tocsr()
    lam = 1e-10 * max(float(AtA.diagonal().mean()), 1e-300)
    x0 = X[mov].ravel()
    sol = spsolve((AtA + lam * identity(AtA.shape[0], format="csr")).tocsc(),
                  A.T @ rhs.ravel() + lam * x0)
    sol = np.where(np.isfinite(sol), sol, x0)
    out = X.copy()
    out[mov] = np.asarray(sol).reshape(-1, 3)
    return out


def _project(region, X, surface):
    if surface is not None and len(region.boundary):
        X = X.copy()
        X[region.boundary] = surface.project(X[region.boundary])
    return X


def _untangle(region, X, surface, iters=20):
    """ARAP iterations until every tet has positive orientation."""
    for _ in range(iters):
        if (tet_determinants(region, X) > 0).all():
            return X, True
        R, W = _rotations_and_weights(_jacobians(region, X), slim=False)
        X = _project(region, _global_step(region, X, R, W), surface)
    return X, bool((tet_determinants(region, X) > 0).all())


def optimize_region(mesh, region, surface=None, max_outer=5, X=None, tol=1e-12):
    """Minimise the distortion energy over ``region``; frozen vertices never move."""
    X = np.array(mesh.vertices if X is None else X, dtype=float)
    X0 = X.copy()
    X, ok = _untangle(region, X, surface)
    if not ok:
        return OptimizeResult(X0, [], False, "inverted")
    E = energy(region, X)
    energies = [E]
    for _ in range(max_outer):
        R, W = _rotations_and_weights(_jacobians(region, X))
        target = _global_step(region, X, R, W)
        d = target - X
        step = 1.0
        accepted = False
        for _ in range(30):
            Y = _project(region, X + step * d, surface)
            En = energy(region, Y)
            if En <= E:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        done = E - En <= tol * max(E, 1.0)
        X, E = Y, En
        energies.append(E)
        if done:
            break
    X[region.frozen] = X0[region.frozen]
    return OptimizeResult(X, energies, True, "")


def displacement_ratio(prev, cur):
    """sqrt(sum |v^k - v^{k-1}|^2) / sqrt(sum |v^{k-1}|^2)."""
    den = np.sqrt((prev ** 2).sum())
    return float(np.sqrt(((cur - prev) ** 2).sum()) / max(den, 1e-300))


def laplace_regularize(mesh, region, epsilon=1e-3, max_iter=50, X=None, history=None):
    """Jacobi averaging of V_in vertices over their edge neighbours.

    Boundary, interface and frozen vertices stay put.  Reverts to the input
    positions if any scaled Jacobian in the mesh would drop to zero or below.
    """
    X = np.array(mesh.vertices if X is None else X, dtype=float)
    move = np.setdiff1d(region.free, region.interface)
    if len(move) == 0:
        return X
    nbrs = [np.array(mesh.vertex_neighbors[v]) for v in move]
    Y = X.copy()
    for _ in range(max_iter):
        prev = Y[move].copy()
        new = np.array([Y[n].mean(axis=0) for n in nbrs])
        Y[move] = new
        r = displacement_ratio(prev, new)
        if history is not None:
            history.append(r)
        if r < epsilon:
            break
    touched = np.unique(np.concatenate([np.array(mesh.vertex_hexes[v]) for v in move]))
    sj, _ = corner_jacobians(Y[mesh.hexes[touched]])
    if (sj <= 0).any():
        return X
    return Y
