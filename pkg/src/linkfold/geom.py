"""Planar geometry kernel.

Orientation and intersection predicates, simple-polygon triangulation with
Lawson edge flips, triangle-area calculus and the cyclic ("cocircular")
polygon solver.  Vertex lists are ``(n, 2)`` float arrays throughout; any
sequence of pairs is accepted on input.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    ConvergenceFailure,
    DegenerateTriangle,
    InfeasibleLengths,
    InvalidInput,
)

__all__ = [
    "ORIENT_EPS",
    "as_points",
    "signed_area",
    "is_simple",
    "interior_angles",
    "turning_angles",
    "Triangulation",
    "triangulate",
    "fan_triangulation",
    "opposite_angles",
    "triangle_area_partials",
    "heron_area",
    "check_c1",
    "CocircularSolution",
    "cocircular_polygon",
    "circumcircle_residual",
]

ORIENT_EPS = 1e-12
LAWSON_SLACK = 1e-9
DEGENERATE_SLACK = 1e-12
COCIRCULAR_MAX_ITER = 200


def as_points(vertices) -> np.ndarray:
    pts = np.asarray(vertices, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise InvalidInput(f"expected an (n, 2) array of points, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise InvalidInput("vertex coordinates must be finite")
    return pts


def signed_area(vertices) -> float:
    """Shoelace area, positive for counterclockwise vertex order."""
    pts = as_points(vertices)
    if len(pts) < 3:
        raise InvalidInput("signed_area needs at least 3 vertices")
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


@lru_cache(maxsize=256)
def _segment_pairs(n: int, closed: bool):
    """Index arrays for (adjacent, non-adjacent) segment pairs of an n-vertex chain."""
    nseg = n if closed else n - 1
    adj_a, adj_b, far_a, far_b = [], [], [], []
    for i in range(nseg):
        for j in range(i + 1, nseg):
            if j == i + 1 or (closed and i == 0 and j == nseg - 1):
                adj_a.append(i)
                adj_b.append(j)
            else:
                far_a.append(i)
                far_b.append(j)
    as_idx = lambda v: np.asarray(v, dtype=np.intp)  # noqa: E731
    return nseg, as_idx(adj_a), as_idx(adj_b), as_idx(far_a), as_idx(far_b)


def _orient(a, b, c):
    return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (
        c[..., 0] - a[..., 0]
    )


def _on_segment(a, b, c, eps):
    return (
        (np.minimum(a[..., 0], b[..., 0]) - eps <= c[..., 0])
        & (c[..., 0] <= np.maximum(a[..., 0], b[..., 0]) + eps)
        & (np.minimum(a[..., 1], b[..., 1]) - eps <= c[..., 1])
        & (c[..., 1] <= np.maximum(a[..., 1], b[..., 1]) + eps)
    )


def _normalized(pts: np.ndarray) -> np.ndarray:
    lo = pts.min(axis=0)
    scale = float(np.max(pts.max(axis=0) - lo))
    if scale == 0.0:
        return pts - lo
    return (pts - lo) / scale


def is_simple(vertices, closed: bool = True) -> bool:
    """True iff the polyline (or polygon when ``closed``) is an embedding.

    Non-adjacent segments may not touch at all; adjacent segments may only
    share their common endpoint.  Zero-length edges make the chain non-simple.
    The test runs on coordinates rescaled to the unit box, so it is invariant
    under rigid motions and uniform scaling.
    """
    pts = np.asarray(vertices, dtype=float)
    n = len(pts)
    if n < 2 or (closed and n < 3):
        return False
    if not np.all(np.isfinite(pts)):
        return False
    pts = _normalized(pts)
    eps = ORIENT_EPS
    nseg, adj_a, adj_b, far_a, far_b = _segment_pairs(n, closed)
    starts = pts[:nseg]
    ends = pts[(np.arange(nseg) + 1) % n]
    if np.any(np.hypot(*(ends - starts).T) <= eps):
        return False

    if len(adj_a):
        # segment adj_a ends where adj_b starts, except the wrap pair (0, nseg-1)
        wrap = (adj_a == 0) & (adj_b == nseg - 1) & closed & (nseg > 2)
        shared = np.where(wrap[:, None], starts[adj_a], ends[adj_a])
        other_a = np.where(wrap[:, None], ends[adj_a], starts[adj_a])
        other_b = np.where(wrap[:, None], starts[adj_b], ends[adj_b])
        u = other_a - shared
        v = other_b - shared
        cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
        dot = np.einsum("ij,ij->i", u, v)
        if np.any((np.abs(cross) <= eps) & (dot > 0)):
            return False

    if len(far_a):
        p1, p2 = starts[far_a], ends[far_a]
        p3, p4 = starts[far_b], ends[far_b]
        bb = (
            (np.maximum(p1[:, 0], p2[:, 0]) + eps >= np.minimum(p3[:, 0], p4[:, 0]))
            & (np.maximum(p3[:, 0], p4[:, 0]) + eps >= np.minimum(p1[:, 0], p2[:, 0]))
            & (np.maximum(p1[:, 1], p2[:, 1]) + eps >= np.minimum(p3[:, 1], p4[:, 1]))
            & (np.maximum(p3[:, 1], p4[:, 1]) + eps >= np.minimum(p1[:, 1], p2[:, 1]))
        )
        if not np.any(bb):
            return True
        p1, p2, p3, p4 = p1[bb], p2[bb], p3[bb], p4[bb]
        o1 = _orient(p1, p2, p3)
        o2 = _orient(p1, p2, p4)
        o3 = _orient(p3, p4, p1)
        o4 = _orient(p3, p4, p2)
        s1, s2, s3, s4 = (np.where(np.abs(o) <= eps, 0, np.sign(o)) for o in (o1, o2, o3, o4))
        if np.any((s1 * s2 < 0) & (s3 * s4 < 0)):
            return False
        touch = (
            ((s1 == 0) & _on_segment(p1, p2, p3, eps))
            | ((s2 == 0) & _on_segment(p1, p2, p4, eps))
            | ((s3 == 0) & _on_segment(p3, p4, p1, eps))
            | ((s4 == 0) & _on_segment(p3, p4, p2, eps))
        )
        if np.any(touch):
            return False
    return True


def turning_angles(vertices) -> np.ndarray:
    """Signed exterior (turning) angle at every vertex of a closed polygon, in (-pi, pi]."""
    pts = as_points(vertices)
    e_in = pts - np.roll(pts, 1, axis=0)
    e_out = np.roll(pts, -1, axis=0) - pts
    cross = e_in[:, 0] * e_out[:, 1] - e_in[:, 1] * e_out[:, 0]
    dot = np.einsum("ij,ij->i", e_in, e_out)
    return np.arctan2(cross, dot)


def interior_angles(vertices) -> np.ndarray:
    """Interior angle at each vertex of a simple, counterclockwise polygon."""
    pts = as_points(vertices)
    if len(pts) < 3 or not is_simple(pts, closed=True):
        raise InvalidInput("interior_angles needs a simple polygon")
    if signed_area(pts) <= 0:
        raise InvalidInput("interior_angles needs a positively oriented polygon")
    return math.pi - turning_angles(pts)


# --------------------------------------------------------------------------
# triangulation


@dataclass(frozen=True)
class Triangulation:
    """Triangulation of an n-gon without extra vertices.

    ``triangles`` are counterclockwise index triples; ``diagonals`` are sorted
    index pairs.
    """

    n_vertices: int
    diagonals: tuple
    triangles: tuple

    def diagonal_triangles(self) -> dict:
        """Map every diagonal to the (one or two) triangle indices containing it."""
        adj = {}
        for t, tri in enumerate(self.triangles):
            for k in range(3):
                e = tuple(sorted((tri[k], tri[(k + 1) % 3])))
                adj.setdefault(e, []).append(t)
        return {d: adj.get(d, []) for d in self.diagonals}

    def check(self) -> None:
        """Raise InvalidInput if the combinatorial invariants do not hold."""
        n = self.n_vertices
        if len(self.triangles) != n - 2 or len(self.diagonals) != n - 3:
            raise InvalidInput("triangulation has the wrong number of triangles/diagonals")
        count = {}
        for tri in self.triangles:
            for k in range(3):
                e = tuple(sorted((tri[k], tri[(k + 1) % 3])))
                count[e] = count.get(e, 0) + 1
        sides = {tuple(sorted((i, (i + 1) % n))) for i in range(n)}
        for e, c in count.items():
            want = 1 if e in sides else 2
            if c != want or (e not in sides and e not in set(self.diagonals)):
                raise InvalidInput(f"edge {e} used by {c} triangles")
        if not sides <= set(count):
            raise InvalidInput("a polygon side is not covered by any triangle")


def _point_in_triangle(p, a, b, c, eps):
    return _orient(a, b, p) >= -eps and _orient(b, c, p) >= -eps and _orient(c, a, p) >= -eps


def _ear_clip(pts: np.ndarray) -> list:
    """Ear clipping on a counterclockwise simple polygon.

    Among the current ears, the one whose tip is leftmost (then lowest) is
    clipped first, which makes the result deterministic.
    """
    remaining = list(range(len(pts)))
    triangles = []
    eps = ORIENT_EPS
    while len(remaining) > 3:
        k = len(remaining)
        best = None
        for pos in range(k):
            i_prev, i, i_next = remaining[pos - 1], remaining[pos], remaining[(pos + 1) % k]
            a, b, c = pts[i_prev], pts[i], pts[i_next]
            if _orient(a, b, c) <= eps:
                continue
            blocked = False
            for j in remaining:
                if j in (i_prev, i, i_next):
                    continue
                if _point_in_triangle(pts[j], a, b, c, eps):
                    blocked = True
                    break
            if blocked:
                continue
            key = (pts[i, 0], pts[i, 1], i)
            if best is None or key < best[0]:
                best = (key, pos)
        if best is None:
            raise InvalidInput("no ear found; polygon is not simple")
        pos = best[1]
        triangles.append((remaining[pos - 1], remaining[pos], remaining[(pos + 1) % k]))
        del remaining[pos]
    triangles.append(tuple(remaining))
    return triangles


def _angle_at(pts, apex, p, q) -> float:
    u = pts[p] - pts[apex]
    v = pts[q] - pts[apex]
    return math.atan2(abs(u[0] * v[1] - u[1] * v[0]), float(u @ v))


def opposite_angles(pts, tri: Triangulation) -> dict:
    """For each diagonal, the two angles facing it in its adjacent triangles."""
    pts = as_points(pts)
    out = {}
    for d, (t1, t2) in tri.diagonal_triangles().items():
        angs = []
        for t in (t1, t2):
            apex = next(v for v in tri.triangles[t] if v not in d)
            angs.append(_angle_at(pts, apex, d[0], d[1]))
        out[d] = tuple(angs)
    return out


def _lawson_flip(pts: np.ndarray, triangles: list, budget: int) -> list:
    triangles = [tuple(t) for t in triangles]
    n = len(pts)
    sides = {tuple(sorted((i, (i + 1) % n))) for i in range(n)}
    flips = 0
    while True:
        edge_tris = {}
        for t, tri in enumerate(triangles):
            for k in range(3):
                e = tuple(sorted((tri[k], tri[(k + 1) % 3])))
                edge_tris.setdefault(e, []).append(t)
        bad = None
        for e in sorted(edge_tris):
            if e in sides:
                continue
            t1, t2 = edge_tris[e]
            k = next(v for v in triangles[t1] if v not in e)
            l = next(v for v in triangles[t2] if v not in e)  # noqa: E741
            if _angle_at(pts, k, *e) + _angle_at(pts, l, *e) > math.pi + LAWSON_SLACK:
                bad = (e, t1, t2, k, l)
                break
        if bad is None:
            return triangles
        if flips >= budget:
            raise ConvergenceFailure(f"Lawson flip budget of {budget} flips exhausted")
        (i, j), t1, t2, k, l = bad
        new = []
        for a, b, c in ((k, l, i), (l, k, j)):
            new.append((a, b, c) if _orient(pts[a], pts[b], pts[c]) > 0 else (a, c, b))
        triangles[t1], triangles[t2] = new
        flips += 1


def _to_triangulation(n: int, triangles: list) -> Triangulation:
    sides = {tuple(sorted((i, (i + 1) % n))) for i in range(n)}
    diags = set()
    for tri in triangles:
        for k in range(3):
            e = tuple(sorted((tri[k], tri[(k + 1) % 3])))
            if e not in sides:
                diags.add(e)
    return Triangulation(n, tuple(sorted(diags)), tuple(tuple(int(v) for v in t) for t in triangles))


def triangulate(vertices, lawson: bool = False) -> Triangulation:
    """Triangulate a simple polygon using only its own vertices.

    With ``lawson=True`` the ear-clipped triangulation is improved by edge
    flips until every diagonal is a Lawson edge (opposite angles sum to at
    most pi).  The flip loop is capped at ``10 * m**2`` flips.
    """
    pts = as_points(vertices)
    n = len(pts)
    if n < 3 or not is_simple(pts, closed=True):
        raise InvalidInput("triangulate needs a simple polygon with at least 3 vertices")
    if signed_area(pts) < 0:
        rev = pts[::-1]
        tris = [tuple(n - 1 - v for v in t) for t in _ear_clip(rev)]
    else:
        tris = _ear_clip(pts)
    if lawson:
        tris = _lawson_flip(pts, tris, budget=10 * n * n)
    return _to_triangulation(n, tris)


def fan_triangulation(n: int, apex: int | None = None) -> Triangulation:
    """Fan from ``apex`` (default: the second-to-last vertex); valid for convex polygons."""
    if n < 3:
        raise InvalidInput("fan_triangulation needs n >= 3")
    apex = n - 2 if apex is None else apex % n
    tris = []
    for s in range(n):
        a, b = (apex + 1 + s) % n, (apex + 2 + s) % n
        if b == apex:
            break
        tris.append((apex, a, b))
    return _to_triangulation(n, tris)


# --------------------------------------------------------------------------
# triangle calculus


def heron_area(a: float, b: float, c: float) -> float:
    # numerically stable form (Kahan)
    a, b, c = sorted((float(a), float(b), float(c)), reverse=True)
    prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    if prod <= 0:
        return 0.0
    return 0.25 * math.sqrt(prod)


def _check_triangle(li, lj, lk):
    scale = max(li, lj, lk)
    if min(li, lj, lk) <= 0 or min(lj + lk - li, li + lk - lj, li + lj - lk) <= DEGENERATE_SLACK * scale:
        raise DegenerateTriangle(f"side lengths ({li}, {lj}, {lk}) do not form a triangle")


def _opposite_angle(li, lj, lk) -> float:
    """Angle opposite side li, via the half-angle form of the law of cosines."""
    area = heron_area(li, lj, lk)
    cos_num = lj * lj + lk * lk - li * li
    return math.atan2(4.0 * area, cos_num)


def triangle_area_partials(li: float, lj: float, lk: float):
    """First and second partials of a triangle's area with respect to its sides.

    Returns ``(dA/dli, d2A/dli2, d2A/dli dlj)`` where angles are opposite
    their like-indexed sides.
    """
    li, lj, lk = float(li), float(lj), float(lk)
    _check_triangle(li, lj, lk)
    ai = _opposite_angle(li, lj, lk)
    ak = _opposite_angle(lk, li, lj)
    cot_i = math.cos(ai) / math.sin(ai)
    upsilon = (li / math.sin(ai)) ** 3 / (2.0 * li * lj * lk)
    return 0.5 * li * cot_i, 0.5 * cot_i - upsilon, upsilon * math.cos(ak)


# --------------------------------------------------------------------------
# cyclic polygons


def check_c1(lengths) -> np.ndarray:
    """Validate the closing condition: every side shorter than the sum of the others."""
    lengths = np.asarray(lengths, dtype=float)
    if lengths.ndim != 1 or len(lengths) < 3:
        raise InfeasibleLengths("need at least 3 side lengths")
    if not np.all(np.isfinite(lengths)) or np.any(lengths <= 0):
        raise InfeasibleLengths("side lengths must be positive and finite")
    total = lengths.sum()
    if np.any(lengths >= total - lengths):
        raise InfeasibleLengths("infeasible lengths: a side is not shorter than the sum of the others")
    return lengths


@dataclass(frozen=True)
class CocircularSolution:
    radius: float
    center: np.ndarray
    central_angles: np.ndarray
    vertices: np.ndarray
    center_inside: bool

    @property
    def area(self) -> float:
        return float(0.5 * self.radius**2 * np.sum(np.sin(self.central_angles)))


def _central_angles(lengths: np.ndarray, i_max: int, phi_max: float) -> np.ndarray:
    half = math.sin(0.5 * phi_max)
    ratio = np.clip(lengths * half / lengths[i_max], -1.0, 1.0)
    phis = 2.0 * np.arcsin(ratio)
    phis[i_max] = phi_max
    return phis


def cocircular_polygon(lengths) -> CocircularSolution:
    """Unique convex polygon inscribed in a circle with the given side lengths.

    The residual is parameterized by the central angle ``phi`` subtended by
    the longest side, with ``R = l_max / (2 sin(phi/2))``.  ``phi < pi`` is
    the center-inside regime and ``phi > pi`` the center-outside one; the
    angle-sum residual is strictly increasing in ``phi`` across both, so one
    bracketed Newton iteration covers them.  The center sits at the origin
    and vertex 0 on the positive x-axis; vertices run counterclockwise.
    """
    lengths = check_c1(lengths)
    i_max = int(np.argmax(lengths))
    lmax = float(lengths[i_max])

    others = [float(lengths[i]) / lmax for i in range(len(lengths)) if i != i_max]

    def residual(phi):
        half = math.sin(0.5 * phi)
        return phi + sum(2.0 * math.asin(min(q * half, 1.0)) for q in others) - 2.0 * math.pi

    def slope(phi):
        half, c = math.sin(0.5 * phi), math.cos(0.5 * phi)
        total = 1.0
        for q in others:
            root = 1.0 - (q * half) ** 2
            if root <= 1e-24:
                return math.nan
            total += q * c / math.sqrt(root)
        return total

    lo, hi = 0.0, 2.0 * math.pi
    # shrink hi until it brackets; residual > 0 just below 2*pi under (c1)
    gap = 1e-3
    for _ in range(60):
        if residual(2.0 * math.pi - gap) > 0:
            break
        gap *= 0.5
    else:
        raise ConvergenceFailure("could not bracket the circumradius")
    hi = 2.0 * math.pi - gap
    if residual(math.pi) >= 0:
        hi = math.pi
    else:
        lo = math.pi
    # safeguarded Newton: fall back to bisection whenever a step leaves the bracket
    phi = 2.0 * math.pi * lmax / float(np.sum(lengths))
    if not lo < phi < hi:
        phi = 0.5 * (lo + hi)
    for _ in range(COCIRCULAR_MAX_ITER):
        r = residual(phi)
        if r == 0.0:
            lo = hi = phi
            break
        if r < 0:
            lo = phi
        else:
            hi = phi
        if hi - lo <= 4e-16 * hi:
            break
        d = slope(phi)
        nxt = phi - r / d if d > 0 and math.isfinite(d) else math.nan
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - phi) <= 2e-16 * phi:
            lo = hi = nxt
            break
        phi = nxt
    else:
        raise ConvergenceFailure("cocircular solve did not converge")
    phi = 0.5 * (lo + hi)
    radius = lmax / (2.0 * math.sin(0.5 * phi))
    phis = _central_angles(lengths, i_max, phi)
    starts = np.concatenate(([0.0], np.cumsum(phis)[:-1]))
    verts = radius * np.column_stack((np.cos(starts), np.sin(starts)))
    return CocircularSolution(
        radius=radius,
        center=np.zeros(2),
        central_angles=phis,
        vertices=verts,
        center_inside=phi <= math.pi,
    )


def circumcircle_residual(vertices) -> float:
    """Relative deviation of the vertices from their least-squares circle.

    Fits ``x^2 + y^2 + D x + E y + F = 0`` (algebraic fit) and returns
    ``max_i | |v_i - c| - R | / R``.
    """
    pts = as_points(vertices)
    mu = pts.mean(axis=0)
    q = pts - mu
    a = np.column_stack((q, np.ones(len(q))))
    rhs = -(q**2).sum(axis=1)
    (d, e, f), *_ = np.linalg.lstsq(a, rhs, rcond=None)
    c = -0.5 * np.array([d, e])
    r = math.sqrt(max(float(c @ c - f), 0.0))
    if r == 0.0:
        return math.inf
    return float(np.max(np.abs(np.hypot(*(q - c).T) - r)) / r)
