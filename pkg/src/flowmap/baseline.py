"""Conventional post hoc reconstruction baseline.

Delaunay triangulation (2D, incremental Bowyer-Watson) over the basis
seed start locations, straight-walk point location, and barycentric
interpolation of the basis trajectories. A multilinear variant covers
lattice-seeded 2D/3D basis sets.

Predicates accumulate their determinant terms with math.fsum and treat
results within 1e-10 of the term magnitude as zero; exactly cocircular
quads are resolved deterministically by flipping to the
lexicographically smaller diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .flow_maps import FlowMapSet
from .ftle import lattice_shape
from .tracer import Trajectory

EPS_REL = 1e-10
OUTSIDE = -1


def orient2d(a, b, c) -> float:
    """Signed doubled area of (a, b, c); 0 when collinear within tolerance."""
    t1 = (b[0] - a[0]) * (c[1] - a[1])
    t2 = (b[1] - a[1]) * (c[0] - a[0])
    det = t1 - t2
    if abs(det) <= EPS_REL * (abs(t1) + abs(t2)):
        return 0.0
    return det


def incircle(a, b, c, d) -> float:
    """Positive iff d lies strictly inside the circumcircle of ccw (a, b, c)."""
    adx, ady = a[0] - d[0], a[1] - d[1]
    bdx, bdy = b[0] - d[0], b[1] - d[1]
    cdx, cdy = c[0] - d[0], c[1] - d[1]
    ad2 = adx * adx + ady * ady
    bd2 = bdx * bdx + bdy * bdy
    cd2 = cdx * cdx + cdy * cdy
    terms = (
        adx * (bdy * cd2 - cdy * bd2),
        -ady * (bdx * cd2 - cdx * bd2),
        ad2 * (bdx * cdy - cdx * bdy),
    )
    det = math.fsum(terms)
    scale = sum(abs(t) for t in terms)
    if abs(det) <= EPS_REL * scale:
        return 0.0
    return det


@dataclass
class Triangulation:
    """Triangle soup with adjacency; triangles are ccw vertex-index triples.

    neighbors[t][i] is the triangle across the edge opposite vertex i of
    triangle t (-1 on the hull boundary).
    """

    vertices: np.ndarray  # (n, 2)
    triangles: np.ndarray  # (nt, 3) int
    neighbors: np.ndarray  # (nt, 3) int

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    def hull_vertex_count(self) -> int:
        hull = set()
        for t in range(self.n_triangles):
            for i in range(3):
                if self.neighbors[t, i] == -1:
                    hull.add(int(self.triangles[t, (i + 1) % 3]))
                    hull.add(int(self.triangles[t, (i + 2) % 3]))
        return len(hull)


class _Builder:
    """Incremental Bowyer-Watson state with tombstoned triangle storage."""

    def __init__(self, verts):
        self.verts = verts  # includes 3 super-triangle vertices at the end
        self.tri = []  # [3] vertex indices, ccw
        self.nbr = []  # [3] neighbor indices, -1 = none
        self.alive = []

    def add_triangle(self, v, n):
        self.tri.append(list(v))
        self.nbr.append(list(n))
        self.alive.append(True)
        return len(self.tri) - 1

    def locate(self, p, start):
        """Straight walk from `start` to the triangle containing p."""
        t = start
        for _ in range(4 * len(self.tri) + 16):
            verts = self.tri[t]
            moved = False
            for i in range(3):
                u, v = verts[(i + 1) % 3], verts[(i + 2) % 3]
                if orient2d(self.verts[u], self.verts[v], p) < 0.0:
                    nxt = self.nbr[t][i]
                    if nxt == -1:
                        return OUTSIDE
                    t = nxt
                    moved = True
                    break
            if not moved:
                return t
        raise RuntimeError("point location walk did not terminate")

    def insert(self, pi, start):
        """Insert vertex pi; returns a triangle index touching it."""
        p = self.verts[pi]
        t0 = self.locate(p, start)
        if t0 == OUTSIDE:
            raise RuntimeError("insertion point outside the super-triangle")
        # grow the cavity of triangles whose circumcircle strictly contains p
        bad = {t0}
        queue = [t0]
        while queue:
            t = queue.pop()
            for nb in self.nbr[t]:
                if nb != -1 and nb not in bad:
                    a, b, c = (self.verts[v] for v in self.tri[nb])
                    if incircle(a, b, c, p) > 0.0:
                        bad.add(nb)
                        queue.append(nb)
        # cavity boundary: edges of bad triangles not shared with another bad one
        boundary = []  # (u, v, outside neighbor)
        for t in bad:
            for i in range(3):
                nb = self.nbr[t][i]
                if nb not in bad:
                    u, v = self.tri[t][(i + 1) % 3], self.tri[t][(i + 2) % 3]
                    boundary.append((u, v, nb))
        for t in bad:
            self.alive[t] = False
        # fan from p; (u, v) edges are ccw so p stays on their left
        edge_to_new = {}
        for u, v, outer in boundary:
            nt = self.add_triangle((pi, u, v), (outer, -1, -1))
            if outer != -1:
                # re-point exactly the outer edge that matches (u, v)
                for j in range(3):
                    e = {self.tri[outer][(j + 1) % 3], self.tri[outer][(j + 2) % 3]}
                    if e == {u, v}:
                        self.nbr[outer][j] = nt
                        break
            edge_to_new[(u, v)] = nt
        # stitch fan-internal neighbors around the cavity cycle
        start_of = {u: nt for (u, v), nt in edge_to_new.items()}
        end_of = {v: nt for (u, v), nt in edge_to_new.items()}
        for (u, v), nt in edge_to_new.items():
            self.nbr[nt][2] = end_of[u]  # across edge (pi, u), opposite vertex v
            self.nbr[nt][1] = start_of[v]  # across edge (v, pi), opposite vertex u
        return next(iter(edge_to_new.values()))


def triangulate(points) -> Triangulation:
    """Delaunay triangulation of >= 3 non-collinear 2D points.

    Deterministic for a given input order; cocircular quads are flipped
    to the lexicographically smaller diagonal in a final pass.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected (n, 2) points, got {pts.shape}")
    n = pts.shape[0]
    if n < 3:
        raise ValueError("need at least 3 points")
    uniq = {(float(x), float(y)) for x, y in pts}
    if len(uniq) != n:
        raise ValueError("duplicate points are not supported")
    if _all_collinear(pts):
        raise ValueError("all points are collinear")

    center = pts.mean(axis=0)
    size = float(np.abs(pts - center).max())
    radius = 1e7 * max(size, 1.0)
    sup = center + radius * np.array(
        [[0.0, 2.0], [-math.sqrt(3.0), -1.0], [math.sqrt(3.0), -1.0]]
    )
    verts = np.vstack([pts, sup])
    builder = _Builder(verts)
    builder.add_triangle((n, n + 1, n + 2), (-1, -1, -1))
    hint = 0
    for i in range(n):
        hint = builder.insert(i, hint)

    tri_rows, nbr_rows = _compact(builder, n)
    tri = Triangulation(vertices=pts, triangles=tri_rows, neighbors=nbr_rows)
    _normalize_cocircular(tri)
    return tri


def _all_collinear(pts) -> bool:
    a = pts[0]
    b = None
    for q in pts[1:]:
        if not np.array_equal(q, a):
            b = q
            break
    if b is None:
        return True
    return all(orient2d(a, b, q) == 0.0 for q in pts[1:])


def _compact(builder: _Builder, n: int):
    """Drop super-triangle triangles and renumber the survivors."""
    keep = [
        t
        for t in range(len(builder.tri))
        if builder.alive[t] and all(v < n for v in builder.tri[t])
    ]
    remap = {t: i for i, t in enumerate(keep)}
    tri_rows = np.array([builder.tri[t] for t in keep], dtype=np.int64)
    nbr_rows = np.full((len(keep), 3), -1, dtype=np.int64)
    for i, t in enumerate(keep):
        for j in range(3):
            nb = builder.nbr[t][j]
            if nb != -1 and nb in remap:
                nbr_rows[i, j] = remap[nb]
    return tri_rows, nbr_rows


def _diag_key(tri: Triangulation, i, j):
    pi, pj = tri.vertices[i], tri.vertices[j]
    return tuple(sorted([(pi[0], pi[1]), (pj[0], pj[1])]))


def _normalize_cocircular(tri: Triangulation, max_sweeps: int = 100) -> None:
    """Flip exactly-cocircular quads to the lexicographic diagonal."""
    for _ in range(max_sweeps):
        flipped = False
        for t in range(tri.n_triangles):
            for i in range(3):
                t2 = tri.neighbors[t, i]
                if t2 == -1 or t2 < t:
                    continue
                u, v = tri.triangles[t, (i + 1) % 3], tri.triangles[t, (i + 2) % 3]
                w1 = tri.triangles[t, i]
                j = _opposite_index(tri, t2, t)
                w2 = tri.triangles[t2, j]
                ic = incircle(
                    tri.vertices[tri.triangles[t, 0]],
                    tri.vertices[tri.triangles[t, 1]],
                    tri.vertices[tri.triangles[t, 2]],
                    tri.vertices[w2],
                )
                if ic != 0.0:
                    continue
                if _diag_key(tri, w1, w2) < _diag_key(tri, u, v):
                    # only flip convex quads; cocircular ones always are,
                    # but guard against collinear degeneracies
                    if (
                        orient2d(tri.vertices[w1], tri.vertices[w2], tri.vertices[u]) == 0.0
                        or orient2d(tri.vertices[w1], tri.vertices[w2], tri.vertices[v]) == 0.0
                    ):
                        continue
                    _flip_edge(tri, t, i, t2, j)
                    flipped = True
        if not flipped:
            return
    raise RuntimeError("cocircular normalization did not converge")


def _opposite_index(tri: Triangulation, t2, t) -> int:
    for j in range(3):
        if tri.neighbors[t2, j] == t:
            return j
    raise RuntimeError("inconsistent neighbor table")


def _flip_edge(tri: Triangulation, t, i, t2, j) -> None:
    """Replace shared edge (u, v) of t/t2 with diagonal (w1, w2)."""
    u = int(tri.triangles[t, (i + 1) % 3])
    v = int(tri.triangles[t, (i + 2) % 3])
    w1 = int(tri.triangles[t, i])
    w2 = int(tri.triangles[t2, j])
    # quad neighbors, looked up by edge identity before anything mutates
    n_uw2 = _neighbor_across(tri, t2, u, w2)
    n_w2v = _neighbor_across(tri, t2, w2, v)
    n_w1u = _neighbor_across(tri, t, w1, u)
    n_vw1 = _neighbor_across(tri, t, v, w1)
    tri.triangles[t] = (w1, u, w2)
    tri.triangles[t2] = (w1, w2, v)
    tri.neighbors[t] = (n_uw2, t2, n_w1u)  # opposite w1, u, w2
    tri.neighbors[t2] = (n_w2v, n_vw1, t)  # opposite w1, w2, v
    for nb, owner in ((n_uw2, t), (n_w1u, t), (n_w2v, t2), (n_vw1, t2)):
        if nb != -1:
            for k in range(3):
                if tri.neighbors[nb, k] in (t, t2):
                    a = tri.triangles[nb, (k + 1) % 3]
                    b = tri.triangles[nb, (k + 2) % 3]
                    # re-point at whichever of t/t2 now shares edge (a, b)
                    tri.neighbors[nb, k] = _owner_of_edge(tri, t, t2, a, b)


def _neighbor_across(tri: Triangulation, t, a, b):
    """Neighbor of t across its directed edge (a, b)."""
    for k in range(3):
        if tri.triangles[t, (k + 1) % 3] == a and tri.triangles[t, (k + 2) % 3] == b:
            return tri.neighbors[t, k]
        if tri.triangles[t, (k + 1) % 3] == b and tri.triangles[t, (k + 2) % 3] == a:
            return tri.neighbors[t, k]
    raise RuntimeError("edge not found in triangle")


def _owner_of_edge(tri: Triangulation, t, t2, a, b):
    for cand in (t, t2):
        vs = set(int(x) for x in tri.triangles[cand])
        if int(a) in vs and int(b) in vs:
            return cand
    raise RuntimeError("flip bookkeeping failed")


def locate(tri: Triangulation, p, hint: int = 0) -> int:
    """Triangle containing p (boundary points included), or OUTSIDE."""
    p = np.asarray(p, dtype=np.float64)
    t = hint if 0 <= hint < tri.n_triangles else 0
    for _ in range(4 * tri.n_triangles + 16):
        moved = False
        for i in range(3):
            u = tri.triangles[t, (i + 1) % 3]
            v = tri.triangles[t, (i + 2) % 3]
            if orient2d(tri.vertices[u], tri.vertices[v], p) < 0.0:
                nxt = tri.neighbors[t, i]
                if nxt == -1:
                    return OUTSIDE
                t = nxt
                moved = True
                break
        if not moved:
            return int(t)
    raise RuntimeError("point location walk did not terminate")


def barycentric_weights(a, b, c, p):
    """Barycentric coordinates of p in triangle (a, b, c); sums to 1."""
    det = orient2d(a, b, c)
    if det == 0.0:
        raise ValueError("zero-area triangle")
    wa = orient2d(p, b, c) / det
    wb = orient2d(a, p, c) / det
    wc = 1.0 - wa - wb
    return wa, wb, wc


def _barycentric_raw(a, b, c, p):
    """Weights without the degenerate-orientation snapping (for interpolation)."""
    det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    wa = ((b[0] - p[0]) * (c[1] - p[1]) - (b[1] - p[1]) * (c[0] - p[0])) / det
    wb = ((c[0] - p[0]) * (a[1] - p[1]) - (c[1] - p[1]) * (a[0] - p[0])) / det
    return wa, wb, 1.0 - wa - wb


def _chained_reconstruct(basis: FlowMapSet, weights_of, seed) -> Trajectory:
    """Shared long/hybrid reconstruction loop.

    `weights_of(q)` returns (vertex indices, weights) for a query start
    location or None when q is not coverable. Long basis sets are a
    single map; hybrid/short sets chain the interpolated position across
    map boundaries.
    """
    seed = np.asarray(seed, dtype=np.float64)
    n = basis.n_file_cycles
    p = basis.samples_per_map
    positions = np.tile(seed, (n, 1))
    valid = np.zeros(n, dtype=bool)
    q = seed
    alive = True
    last = seed
    for k in range(n // p):
        found = weights_of(q) if alive else None
        if found is None:
            positions[k * p :] = last
            valid[k * p :] = False
            alive = False
            break
        idx, w = found
        block = basis.ends[idx, k * p : (k + 1) * p, :]  # (3 or 2^dim, p, dim)
        positions[k * p : (k + 1) * p] = np.tensordot(w, block, axes=(0, 0))
        valid[k * p : (k + 1) * p] = basis.valid[idx, k * p : (k + 1) * p].all(axis=0)
        last = positions[(k + 1) * p - 1]
        q = last
    return Trajectory(seed=seed, positions=positions, valid=valid)


def bc_reconstruct(basis: FlowMapSet, tri: Triangulation, seed, walk_state: dict | None = None) -> Trajectory:
    """Barycentric reconstruction of one new seed from a basis flow-map set.

    The triangulation must have been built over `basis.seeds`. Seeds
    outside the convex hull yield a fully invalid trajectory. Pass a
    per-worker `walk_state` dict to carry the located triangle across
    calls (cheap walks for spatially coherent query batches).
    """

    def weights_of(q):
        hint = walk_state.get("hint", 0) if walk_state is not None else 0
        t = locate(tri, q, hint)
        if t == OUTSIDE:
            return None
        if walk_state is not None:
            walk_state["hint"] = t
        ia, ib, ic = (int(v) for v in tri.triangles[t])
        w = _barycentric_raw(tri.vertices[ia], tri.vertices[ib], tri.vertices[ic], q)
        return np.array([ia, ib, ic]), np.asarray(w)

    return _chained_reconstruct(basis, weights_of, seed)


def lattice_reconstruct(basis: FlowMapSet, seed) -> Trajectory:
    """Multilinear (bi/trilinear) reconstruction on a lattice-seeded basis."""
    res, axes = lattice_shape(basis.seeds)
    dim = basis.dim
    lo = np.array([a[0] for a in axes])
    hi = np.array([a[-1] for a in axes])
    h = np.array([a[1] - a[0] if len(a) > 1 else 1.0 for a in axes])
    strides = np.ones(dim, dtype=np.int64)
    for k in range(1, dim):
        strides[k] = strides[k - 1] * res[k - 1]

    def weights_of(q):
        if np.any(q < lo) or np.any(q > hi):
            return None
        u = (q - lo) / h
        i0 = np.minimum(u.astype(np.int64), np.array(res) - 2)
        frac = u - i0
        idx = np.empty(1 << dim, dtype=np.int64)
        w = np.empty(1 << dim)
        for corner in range(1 << dim):
            flat = 0
            weight = 1.0
            for ax in range(dim):
                bit = (corner >> ax) & 1
                flat += (i0[ax] + bit) * strides[ax]
                weight *= frac[ax] if bit else 1.0 - frac[ax]
            idx[corner] = flat
            w[corner] = weight
        return idx, w

    return _chained_reconstruct(basis, weights_of, np.asarray(seed, dtype=np.float64))
