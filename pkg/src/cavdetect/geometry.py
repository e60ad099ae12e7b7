"""Delaunay tetrahedralization of atom centres and its dual Voronoi vertices.

The triangulation is built by incremental (Bowyer-Watson) insertion with a
visibility walk for point location.  The convex hull is closed off with a
single vertex at infinity, so every hull facet has an "infinite" tetrahedron
on its outer side.  Ties between cospherical or coplanar subsets are broken
by a symbolic perturbation ranked by input index, which makes the result a
unique function of the input coordinates.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .predicates import insphere, orient3d

logger = logging.getLogger(__name__)

INF = -1

# Relative tolerances for the floating point circumsphere.
_DEGENERATE_VOLUME = 1e-10
_EQUIDISTANCE_RTOL = 1e-6


class DegenerateSimplexError(ValueError):
    """Four points are coplanar (or repeated) and have no circumsphere."""


class InsufficientDimensionError(ValueError):
    """Input cannot span a tetrahedron: fewer than 4 points or all coplanar."""


@dataclass(frozen=True)
class VoronoiVertex:
    """Circumcentre of one Delaunay tetrahedron."""

    center: tuple[float, float, float]
    radius: float
    defining_atoms: tuple[int, int, int, int]


def circumsphere(p1, p2, p3, p4):
    """Centre and radius of the sphere through four points.

    >>> c, r = circumsphere((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1))
    >>> [round(float(v), 6) for v in c], round(float(r), 6)
    ([0.5, 0.5, 0.5], 0.866025)
    """
    pts = np.asarray([p1, p2, p3, p4], dtype=float)
    centers, radii, ok = _circumspheres(pts[None, :, :])
    if not ok[0]:
        raise DegenerateSimplexError(f"points are coplanar or repeated: {pts.tolist()}")
    return tuple(float(v) for v in centers[0]), float(radii[0])


def _circumspheres(tet_points):
    """Vectorised circumspheres for an array of shape (m, 4, 3).

    Returns (centers, radii, ok) where ``ok`` flags tetrahedra that pass the
    volume and equidistance checks.
    """
    a = tet_points[:, 0, :]
    u = tet_points[:, 1, :] - a
    v = tet_points[:, 2, :] - a
    w = tet_points[:, 3, :] - a
    vw = np.cross(v, w)
    wu = np.cross(w, u)
    uv = np.cross(u, v)
    det = np.einsum("ij,ij->i", u, vw)
    scale = np.maximum.reduce([
        np.einsum("ij,ij->i", u, u),
        np.einsum("ij,ij->i", v, v),
        np.einsum("ij,ij->i", w, w),
    ]) ** 1.5
    ok = np.abs(det) > _DEGENERATE_VOLUME * scale
    safe_det = np.where(ok, det, 1.0)
    num = (np.einsum("ij,ij->i", u, u)[:, None] * vw
           + np.einsum("ij,ij->i", v, v)[:, None] * wu
           + np.einsum("ij,ij->i", w, w)[:, None] * uv)
    offset = num / (2.0 * safe_det[:, None])
    centers = a + offset
    dists = np.linalg.norm(tet_points - centers[:, None, :], axis=2)
    radii = dists.mean(axis=1)
    spread = dists.max(axis=1) - dists.min(axis=1)
    ok &= spread <= _EQUIDISTANCE_RTOL * np.maximum(radii, 1e-300)
    ok &= np.isfinite(radii)
    return centers, radii, ok


def _insertion_order(points, seed=0):
    """Biased randomised insertion order with Morton-sorted rounds.

    The generator is seeded so that the order, and therefore the work done,
    is reproducible.  The final triangulation does not depend on it.
    """
    n = len(points)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    lo = points.min(axis=0)
    span = float((points.max(axis=0) - lo).max()) or 1.0
    q = ((points - lo) / span * 1023.0).astype(np.int64)
    codes = np.zeros(n, dtype=np.int64)
    for bit in range(10):
        for axis in range(3):
            codes |= ((q[:, axis] >> bit) & 1) << (3 * bit + axis)
    rounds = []
    end = n
    while end > 0:
        start = end // 2 if end > 64 else 0
        rounds.append(perm[start:end])
        end = start
    order = []
    for chunk in reversed(rounds):
        order.extend(chunk[np.argsort(codes[chunk], kind="stable")].tolist())
    return order


class _Triangulation:
    """Mutable incremental triangulation; internal to :func:`delaunay`.

    Tetrahedron ``t`` has vertices ``verts[t]`` (INF marks the vertex at
    infinity) and ``nbrs[t][i]`` is the tetrahedron across the face opposite
    ``verts[t][i]``.  Finite tetrahedra are positively oriented.  An infinite
    tetrahedron becomes positively oriented when INF is replaced by a point
    strictly outside its hull facet.
    """

    def __init__(self, coords):
        self.p = coords
        self.verts = []
        self.nbrs = []
        self.alive = []
        self.free = []
        self.last = 0
        self.walk_steps = 0

    def _new(self, v, n):
        if self.free:
            t = self.free.pop()
            self.verts[t] = v
            self.nbrs[t] = n
            self.alive[t] = True
        else:
            t = len(self.verts)
            self.verts.append(v)
            self.nbrs.append(n)
            self.alive.append(True)
        return t

    def _orient(self, v):
        p = self.p
        return orient3d(p[v[0]], p[v[1]], p[v[2]], p[v[3]])

    def init(self, a, b, c, d):
        if self._orient([a, b, c, d]) < 0:
            b, c = c, b
        fin = [a, b, c, d]
        t0 = self._new(fin, [None] * 4)
        faces = {}
        tets = [t0]
        for i in range(4):
            v = list(fin)
            v[i] = INF
            j, k = [x for x in range(4) if x != i][:2]
            v[j], v[k] = v[k], v[j]
            tets.append(self._new(v, [None] * 4))
        for t in tets:
            v = self.verts[t]
            for i in range(4):
                key = tuple(sorted(v[:i] + v[i + 1:]))
                other = faces.pop(key, None)
                if other is None:
                    faces[key] = (t, i)
                else:
                    s, j = other
                    self.nbrs[t][i] = s
                    self.nbrs[s][j] = t
        self.last = t0

    def _perturbed_insphere(self, v, q):
        p = self.p
        s = insphere(p[v[0]], p[v[1]], p[v[2]], p[v[3]], p[q])
        if s:
            return s
        for x in sorted((v[0], v[1], v[2], v[3], q), reverse=True):
            if x == q:
                return -1
            w = [q if y == x else y for y in v]
            o = self._orient(w)
            if o:
                return o
        return -1

    def _coplanar_in_circle(self, t, k, q):
        """Hull facet of infinite tet ``t`` (INF in slot ``k``) vs coplanar ``q``."""
        v = self.verts[t]
        nb = self.nbrs[t][k]
        face = [x for x in v if x != INF]
        apex = next(x for x in self.verts[nb] if x not in face)
        tet = list(v)
        tet[k] = apex
        # With apex inside the hull this tetrahedron is negatively oriented.
        tet[0], tet[1] = tet[1], tet[0]
        p = self.p
        s = insphere(p[tet[0]], p[tet[1]], p[tet[2]], p[tet[3]], p[q])
        if s:
            return s > 0
        local = orient3d(p[face[0]], p[face[1]], p[face[2]], p[apex])
        for x in sorted(face + [q], reverse=True)[:3]:
            if x == q:
                return False
            f = [q if y == x else y for y in face]
            o = orient3d(p[f[0]], p[f[1]], p[f[2]], p[apex])
            if o:
                return o == local
        return False

    def conflict(self, t, q):
        v = self.verts[t]
        if INF in v:
            k = v.index(INF)
            w = list(v)
            w[k] = q
            o = self._orient(w)
            if o:
                return o > 0
            return self._coplanar_in_circle(t, k, q)
        return self._perturbed_insphere(v, q) > 0

    def locate(self, q):
        t = self.last
        if not self.alive[t] or INF in self.verts[t]:
            t = next(i for i, a in enumerate(self.alive) if a and INF not in self.verts[i])
        off = 0
        steps = 0
        limit = 50 + 4 * len(self.verts)
        while True:
            v = self.verts[t]
            if INF in v:
                return t
            steps += 1
            if steps > limit:
                return self._locate_brute(q)
            off = (off + 1) & 3
            for k in range(4):
                i = (k + off) & 3
                w = list(v)
                w[i] = q
                if self._orient(w) < 0:
                    t = self.nbrs[t][i]
                    break
            else:
                self.walk_steps += steps
                return t

    def _locate_brute(self, q):
        for t, a in enumerate(self.alive):
            if a and self.conflict(t, q):
                return t
        raise RuntimeError("no tetrahedron in conflict with inserted point")

    def insert(self, q):
        start = self.locate(q)
        cavity = {start}
        stack = [start]
        rejected = set()
        boundary = []
        nbrs = self.nbrs
        while stack:
            t = stack.pop()
            for i, n in enumerate(nbrs[t]):
                if n in cavity:
                    continue
                if n not in rejected and self.conflict(n, q):
                    cavity.add(n)
                    stack.append(n)
                else:
                    rejected.add(n)
                    boundary.append((t, i))
        # Facets seen from both sides are resolved in favour of the cavity.
        boundary = [(t, i) for t, i in boundary if nbrs[t][i] not in cavity]

        edges = {}
        last_finite = None
        for t, i in boundary:
            v = list(self.verts[t])
            v[i] = q
            outside = nbrs[t][i]
            n = [None] * 4
            n[i] = outside
            nt = self._new(v, n)
            on = nbrs[outside]
            on[on.index(t)] = nt
            for j in range(4):
                if j == i:
                    continue
                e = [v[x] for x in range(4) if x != i and x != j]
                key = (e[0], e[1]) if e[0] < e[1] else (e[1], e[0])
                other = edges.pop(key, None)
                if other is None:
                    edges[key] = (nt, j)
                else:
                    s, sj = other
                    n[j] = s
                    nbrs[s][sj] = nt
            if INF not in v:
                last_finite = nt
        for t in cavity:
            self.alive[t] = False
            self.free.append(t)
        if last_finite is not None:
            self.last = last_finite

    def finite_tets(self):
        return [v for v, a in zip(self.verts, self.alive) if a and INF not in v]


def _initial_simplex(points, candidates):
    """Pick four affinely independent points, preferring a well-shaped tet."""
    idx = np.asarray(candidates)
    sub = points[idx]
    a = 0
    d2 = ((sub - sub[a]) ** 2).sum(axis=1)
    b = int(np.argmax(d2))
    if d2[b] == 0.0:
        raise InsufficientDimensionError("all points coincide")
    cr = np.cross(sub[b] - sub[a], sub - sub[a])
    c2 = (cr ** 2).sum(axis=1)
    c = int(np.argmax(c2))
    if c2[c] == 0.0:
        raise InsufficientDimensionError("all points are collinear")
    vol = np.abs((sub - sub[a]) @ cr[c])
    d = int(np.argmax(vol))
    coords = [tuple(p) for p in sub[[a, b, c, d]].tolist()]
    if vol[d] == 0.0 or orient3d(*coords) == 0:
        raise InsufficientDimensionError("all points are coplanar")
    return tuple(int(idx[k]) for k in (a, b, c, d))


def delaunay(points) -> np.ndarray:
    """Delaunay tetrahedralization of 3D points.

    Parameters
    ----------
    points : array_like, shape (n, 3)
        Point coordinates (Å).  Exact duplicates are ignored after their
        first occurrence.

    Returns
    -------
    ndarray of int, shape (m, 4)
        Vertex indices of the finite tetrahedra.  Each row is sorted and the
        rows are in lexicographic order, so output is canonical.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected an (n, 3) array, got shape {pts.shape}")
    if len(pts) < 4:
        raise InsufficientDimensionError(f"need at least 4 points, got {len(pts)}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("point coordinates must be finite")

    coords = [tuple(p) for p in pts.tolist()]
    first_index = {}
    for i, key in enumerate(coords):
        first_index.setdefault(key, i)
    unique = [i for i in _insertion_order(pts) if first_index[coords[i]] == i]
    if len(unique) < len(pts):
        logger.warning("delaunay: skipped %d duplicate points", len(pts) - len(unique))

    a, b, c, d = _initial_simplex(pts, unique)
    tri = _Triangulation(coords)
    tri.init(a, b, c, d)
    first = {a, b, c, d}
    for q in unique:
        if q not in first:
            tri.insert(q)

    tets = np.array(sorted(tuple(sorted(v)) for v in tri.finite_tets()), dtype=np.int64)
    return tets.reshape(-1, 4)


def voronoi_vertices(points, tets, stats: dict | None = None) -> list[VoronoiVertex]:
    """One Voronoi vertex (circumcentre) per Delaunay tetrahedron.

    Tetrahedra whose floating point circumsphere fails the flatness or
    equidistance check are dropped; the number dropped is stored in
    ``stats["degenerate"]`` when a dict is supplied.
    """
    pts = np.asarray(points, dtype=float)
    tets = np.asarray(tets, dtype=np.int64).reshape(-1, 4)
    if len(tets) == 0:
        if stats is not None:
            stats["degenerate"] = 0
        return []
    centers, radii, ok = _circumspheres(pts[tets])
    dropped = int((~ok).sum())
    if dropped:
        logger.info("voronoi_vertices: dropped %d degenerate tetrahedra", dropped)
    if stats is not None:
        stats["degenerate"] = dropped
    out = []
    for idx in np.flatnonzero(ok):
        c = centers[idx]
        out.append(VoronoiVertex(
            center=(float(c[0]), float(c[1]), float(c[2])),
            radius=float(radii[idx]),
            defining_atoms=tuple(int(x) for x in tets[idx]),
        ))
    return out
