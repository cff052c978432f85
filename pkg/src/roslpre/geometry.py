"""Euclidean primitives: vectors, closed balls, and convex polytopes in
vertex representation.

Polytopes are stored canonically: the vertex array holds exactly the extreme
points of the set, sorted lexicographically, so two polytopes describe the
same set iff their vertex arrays are equal. Exact hulls are provided for
dimensions 1 (sort), 2 (monotone chain) and 3 (incremental hull); higher
dimensions are rejected.

All values are immutable after construction and every operation is pure, so
they are safe to use from concurrent workers without synchronization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Geometric tolerance for collinearity/coincidence decisions on unit-scale
# data. Every predicate takes an explicit tol with this default.
DEFAULT_TOL = 1e-9

_SUPPORTED_DIMS = (1, 2, 3)
_ETA = 1e-12  # bare weight threshold inside the nearest-point solver


def as_vector(x) -> np.ndarray:
    """Coerce to a finite 1-D float array; scalars become 1-D points."""
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("vector must be one-dimensional and nonempty")
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite coordinates")
    return v


@dataclass(frozen=True, eq=False)
class Ball:
    """Closed Euclidean ball; radius 0 denotes the singleton {center}."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = as_vector(self.center)
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        r = float(self.radius)
        if not np.isfinite(r) or r < 0.0:
            raise ValueError("radius must be finite and >= 0")
        object.__setattr__(self, "radius", r)

    @property
    def dim(self) -> int:
        return self.center.size

    def __repr__(self):
        return f"Ball(center={self.center.tolist()}, radius={self.radius})"


def ball_contains(ball: Ball, z, tol: float = DEFAULT_TOL) -> bool:
    """True iff ||z - center|| <= radius + tol."""
    z = as_vector(z)
    if z.size != ball.dim:
        raise ValueError("dimension mismatch")
    return float(np.linalg.norm(z - ball.center)) <= ball.radius + tol


class Polytope:
    """Convex hull of finitely many points, stored by its extreme points.

    ``points`` is an (n, d) array-like; a plain 1-D sequence is read as n
    points in dimension 1. Construction canonicalizes: interior and
    non-extreme boundary points are dropped (up to ``tol``) and the
    remaining vertices are sorted lexicographically.
    """

    __slots__ = ("_vertices",)

    def __init__(self, points, tol: float = DEFAULT_TOL):
        self._vertices = _canonical_hull(points, tol)

    @classmethod
    def _from_canonical(cls, vertices: np.ndarray) -> "Polytope":
        # Trusted constructor for vertices already in canonical form
        # (e.g. translates of a canonical polytope).
        p = cls.__new__(cls)
        vertices = np.ascontiguousarray(vertices, dtype=float)
        vertices.setflags(write=False)
        p._vertices = vertices
        return p

    @property
    def vertices(self) -> np.ndarray:
        return self._vertices

    @property
    def dim(self) -> int:
        return self._vertices.shape[1]

    def __eq__(self, other):
        if not isinstance(other, Polytope):
            return NotImplemented
        return (self._vertices.shape == other._vertices.shape
                and bool(np.array_equal(self._vertices, other._vertices)))

    def __repr__(self):
        return f"Polytope({self._vertices.tolist()})"


def convex_hull(points, tol: float = DEFAULT_TOL) -> Polytope:
    """Canonical polytope spanned by ``points`` (see Polytope)."""
    return Polytope(points, tol)


def extreme_points(poly: Polytope) -> list[np.ndarray]:
    """The canonical vertex list; nonempty for every valid polytope."""
    return list(poly.vertices)


def support(poly: Polytope, u) -> float:
    """Support value max_v <v, u> over the vertices (exact maximum)."""
    u = as_vector(u)
    if u.size != poly.dim:
        raise ValueError("dimension mismatch")
    return float((poly.vertices @ u).max())


def contains(poly: Polytope, z, tol: float = DEFAULT_TOL) -> bool:
    """True iff dist(z, poly) <= tol, decided by nearest-point projection.

    Exact bounding-box and vertex-distance bounds short-circuit the easy
    cases; the remaining band runs the projection solver.
    """
    z = as_vector(z)
    if z.size != poly.dim:
        raise ValueError("dimension mismatch")
    if tol < 0:
        raise ValueError("tol must be >= 0")
    V = poly.vertices
    lo = V.min(axis=0)
    hi = V.max(axis=0)
    box_gap = np.maximum(np.maximum(lo - z, z - hi), 0.0)
    if float(np.linalg.norm(box_gap)) > tol:
        return False  # dist to the hull is at least dist to its box
    if float(np.linalg.norm(V - z, axis=1).min()) <= tol:
        return True
    _, dist = project_onto(poly, z)
    return dist <= tol


def project_onto(poly: Polytope, z) -> tuple[np.ndarray, float]:
    """Nearest point of the polytope to ``z`` and its distance.

    The returned point p satisfies the variational inequality
    <z - p, v - p> <= DEFAULT_TOL for every vertex v, which certifies
    optimality. Raises RuntimeError("projection failed") if the iteration
    does not reach that residual within its budget.
    """
    z = as_vector(z)
    if z.size != poly.dim:
        raise ValueError("dimension mismatch")
    Q = poly.vertices - z
    max_iter = 10 * (len(Q) + poly.dim) ** 2
    x, _ = _wolfe_min_norm(Q, DEFAULT_TOL, max_iter)
    return z + x, float(np.linalg.norm(x))


# ---------------------------------------------------------------------------
# nearest point in a convex hull (Wolfe's min-norm point algorithm)

def _affine_weights(pts: np.ndarray) -> np.ndarray:
    """Weights (summing to 1, possibly negative) of the min-norm point of
    the affine hull of ``pts`` rows, via the bordered normal equations."""
    k = len(pts)
    M = np.zeros((k + 1, k + 1))
    M[0, 1:] = 1.0
    M[1:, 0] = 1.0
    M[1:, 1:] = pts @ pts.T
    rhs = np.zeros(k + 1)
    rhs[0] = 1.0
    sol = np.linalg.lstsq(M, rhs, rcond=None)[0]
    w = sol[1:]
    s = w.sum()
    if abs(s) > _ETA:
        w = w / s
    return w


def _wolfe_min_norm(Q: np.ndarray, tol: float, max_iter: int):
    """Min-norm point of conv(rows of Q).

    Returns (x, residual) where residual = ||x||^2 - min_i <x, q_i> is the
    variational-inequality defect. Raises RuntimeError("projection failed")
    when the residual does not drop below tol within max_iter steps.
    """
    idx0 = int(np.argmin(np.einsum("ij,ij->i", Q, Q)))
    active = [idx0]
    lam = np.array([1.0])
    x = Q[idx0].astype(float).copy()
    steps = 0
    while True:
        gains = Q @ x
        residual = float(x @ x) - float(gains.min())
        if residual <= tol:
            return x, residual
        j = int(np.argmin(gains))
        if j in active or steps > max_iter:
            raise RuntimeError("projection failed")
        active.append(j)
        lam = np.append(lam, 0.0)
        while True:
            steps += 1
            if steps > max_iter:
                raise RuntimeError("projection failed")
            alpha = _affine_weights(Q[active])
            if alpha.min() > _ETA:
                lam = alpha
                break
            # step from lam toward alpha until a weight hits zero, drop it
            blocking = alpha <= _ETA
            denom = lam[blocking] - alpha[blocking]
            denom[denom <= _ETA] = _ETA
            theta = float(min(1.0, (lam[blocking] / denom).min()))
            lam = theta * alpha + (1.0 - theta) * lam
            keep = lam > _ETA
            if keep.all():
                keep[int(np.argmin(lam))] = False
            active = [a for a, k in zip(active, keep) if k]
            lam = lam[keep]
            lam = lam / lam.sum()
        x = lam @ Q[active]


# ---------------------------------------------------------------------------
# hull construction

def _canonical_hull(points, tol: float) -> np.ndarray:
    if not np.isfinite(tol) or tol <= 0:
        raise ValueError("tol must be positive")
    try:
        pts = np.asarray(points, dtype=float)
    except (ValueError, TypeError) as exc:
        raise ValueError("mixed dimensions") from exc
    if pts.size == 0:
        raise ValueError("empty point set")
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise ValueError("points must form an (n, d) array")
    if not np.all(np.isfinite(pts)):
        raise ValueError("non-finite coordinates")
    d = pts.shape[1]
    if d not in _SUPPORTED_DIMS:
        raise ValueError("dimension unsupported")
    pts = _dedupe_sorted(pts, tol)
    if d == 1:
        verts = _hull_1d(pts, tol)
    elif d == 2:
        verts = pts[_chain_indices(pts, tol)]
    else:
        verts = _hull_3d(pts, tol)
    verts = np.ascontiguousarray(verts[_lex_order(verts)])
    verts.setflags(write=False)
    return verts


def _lex_order(V: np.ndarray) -> np.ndarray:
    return np.lexsort(V.T[::-1])


def _dedupe_sorted(pts: np.ndarray, tol: float) -> np.ndarray:
    pts = pts[_lex_order(pts)]
    kept = [pts[0]]
    for p in pts[1:]:
        if np.abs(p - kept[-1]).max() > tol:
            kept.append(p)
    return np.asarray(kept)


def _hull_1d(pts: np.ndarray, tol: float) -> np.ndarray:
    if pts[-1, 0] - pts[0, 0] <= tol:
        return pts[:1]
    return pts[[0, -1]]


def _chain_indices(pts: np.ndarray, tol: float) -> list[int]:
    """Monotone-chain hull of lex-sorted deduped 2-D points.

    Pops non-left turns and points within tol of the current edge line, so
    the result contains extreme points only.
    """
    n = len(pts)
    if n <= 2:
        return list(range(n))

    def build(order):
        chain: list[int] = []
        for i in order:
            while len(chain) >= 2:
                a = pts[chain[-2]]
                b = pts[chain[-1]]
                ab = b - a
                cross = ab[0] * (pts[i, 1] - a[1]) - ab[1] * (pts[i, 0] - a[0])
                if cross <= tol * float(np.hypot(ab[0], ab[1])):
                    chain.pop()
                else:
                    break
            chain.append(i)
        return chain

    lower = build(range(n))
    upper = build(range(n - 1, -1, -1))
    return lower[:-1] + upper[:-1]


def _hull_3d(pts: np.ndarray, tol: float) -> np.ndarray:
    n = len(pts)
    if n == 1:
        return pts
    p0 = pts[0]
    rel = pts - p0
    i1 = int(np.argmax(np.einsum("ij,ij->i", rel, rel)))
    axis = pts[i1] - p0
    axis_len = float(np.linalg.norm(axis))
    if axis_len <= tol:
        return pts[:1]
    e0 = axis / axis_len

    perp = rel - np.outer(rel @ e0, e0)
    i2 = int(np.argmax(np.einsum("ij,ij->i", perp, perp)))
    if float(np.linalg.norm(perp[i2])) <= tol:
        # collinear: keep the two parameter extremes
        t = rel @ e0
        return pts[[int(np.argmin(t)), int(np.argmax(t))]]

    normal = np.cross(pts[i1] - p0, pts[i2] - p0)
    normal = normal / np.linalg.norm(normal)
    height = rel @ normal
    i3 = int(np.argmax(np.abs(height)))
    if abs(float(height[i3])) <= tol:
        # coplanar: hull in plane coordinates, lift back
        e1 = perp[i2] / np.linalg.norm(perp[i2])
        uv = np.column_stack([rel @ e0, rel @ e1])
        order = _lex_order(uv)
        idx = [order[k] for k in _chain_indices(uv[order], tol)]
        return pts[idx]

    verts_idx = _incremental_hull_3d(pts, [0, i1, i2, i3], tol)
    return _certify_extreme(pts[verts_idx], tol)


def _face_normal(pts: np.ndarray, face) -> np.ndarray:
    a, b, c = (pts[i] for i in face)
    nrm = np.cross(b - a, c - a)
    length = float(np.linalg.norm(nrm))
    if length < 1e-30:
        return np.zeros(3)
    return nrm / length


def _incremental_hull_3d(pts: np.ndarray, simplex: list[int], tol: float):
    interior = pts[simplex].mean(axis=0)

    def oriented(face):
        nrm = _face_normal(pts, face)
        if float(nrm @ (interior - pts[face[0]])) > 0.0:
            return (face[0], face[2], face[1])
        return tuple(face)

    a, b, c, d = simplex
    faces = [oriented(f) for f in ((a, b, c), (a, b, d), (a, c, d), (b, c, d))]

    for i in range(len(pts)):
        if i in simplex:
            continue
        p = pts[i]
        visible = []
        for f in faces:
            nrm = _face_normal(pts, f)
            if not nrm.any() or float(nrm @ (p - pts[f[0]])) > tol:
                visible.append(f)
        if not visible:
            continue
        edge_count: dict[tuple[int, int], int] = {}
        for f in visible:
            for e in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
                key = (min(e), max(e))
                edge_count[key] = edge_count.get(key, 0) + 1
        horizon = [e for e, cnt in edge_count.items() if cnt == 1]
        faces = [f for f in faces if f not in visible]
        for u, v in horizon:
            faces.append(oriented((i, u, v)))

    idx = sorted({i for f in faces for i in f})
    return idx


def _certify_extreme(V: np.ndarray, tol: float) -> np.ndarray:
    """Drop every point that lies within tol of the hull of the others.

    Dropping a non-extreme point never changes the hull, so a single pass
    over a shrinking index set is sound.
    """
    current = list(range(len(V)))
    for i in range(len(V)):
        if len(current) == 1:
            break
        others = [j for j in current if j != i]
        if len(others) == len(current):
            continue  # i already dropped
        Q = V[others] - V[i]
        budget = 10 * (len(others) + V.shape[1]) ** 2
        x, _ = _wolfe_min_norm(Q, tol * tol, budget)
        if float(np.linalg.norm(x)) <= tol:
            current = others
    return V[current]
