"""Scalar fields on the moduli spaces and their chart gradients.

Vertex-level pieces (strain energy, area, nonconvexity weight) return a value
and an ``(n, 2)`` gradient with respect to vertex positions; the composite
Lyapunov-Reeb fields pull those back to chart coordinates through the
embedding Jacobian.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import geom
from .chart import (
    ArmChart,
    CycleChart,
    LinkageKind,
    chart_vector,
    cycle_constraint,
    embed,
    state_from_vector,
    wrap_angles,
)
from .chart import _embed as _chain_points
from .errors import InfeasibleLengths, InvalidInput, InvalidParams, NearContact

__all__ = [
    "NEAR_CONTACT",
    "chain_edges",
    "strain_energy",
    "area_and_gradient",
    "area_theta",
    "area_lambda",
    "nonconvexity_w",
    "h_straight",
    "h_cocircular",
    "cocircular_area",
    "project_straight",
    "project_cocircular",
    "BumpParams",
    "bump_eta",
    "ScalarField",
    "lr_function",
]

NEAR_CONTACT = 1e-14
_EXP_FLOOR = -700.0


def chain_edges(n: int, closed: bool) -> list:
    edges = [(i, i + 1) for i in range(n - 1)]
    if closed:
        edges.append((n - 1, 0))
    return edges


@lru_cache(maxsize=256)
def _strain_index(n: int, edges: tuple):
    ii, jj, kk = [], [], []
    for i, j in edges:
        for k in range(n):
            if k != i and k != j:
                ii.append(i)
                jj.append(j)
                kk.append(k)
    return np.array(ii, dtype=np.intp), np.array(jj, dtype=np.intp), np.array(kk, dtype=np.intp)


def _scatter(n, idx, vec):
    return np.column_stack(
        (np.bincount(idx, weights=vec[:, 0], minlength=n), np.bincount(idx, weights=vec[:, 1], minlength=n))
    )


def strain_energy(vertices, edges=None, closed: bool = False):
    """Inverse-square self-avoidance energy and its vertex gradient.

    Sums ``1 / (|p_i - p_k| + |p_j - p_k| - |p_i - p_j|)**2`` over every edge
    ``(i, j)`` and every vertex ``k`` off that edge.  ``edges`` defaults to the
    chain (or cycle, when ``closed``) on the vertex order.
    """
    pts = np.asarray(vertices, dtype=float)
    n = len(pts)
    edges = tuple(map(tuple, chain_edges(n, closed) if edges is None else edges))
    ii, jj, kk = _strain_index(n, edges)
    if len(ii) == 0:
        return 0.0, np.zeros_like(pts)
    a = pts[ii] - pts[kk]
    b = pts[jj] - pts[kk]
    c = pts[ii] - pts[jj]
    da = np.hypot(a[:, 0], a[:, 1])
    db = np.hypot(b[:, 0], b[:, 1])
    dc = np.hypot(c[:, 0], c[:, 1])
    d = da + db - dc
    if np.min(d) <= NEAR_CONTACT or np.min(da) == 0 or np.min(db) == 0:
        raise NearContact("a vertex touches a non-incident edge")
    value = float(np.sum(d**-2))
    coef = (-2.0 * d**-3)[:, None]
    ua, ub, uc = a / da[:, None], b / db[:, None], c / dc[:, None]
    grad = _scatter(n, ii, coef * (ua - uc)) + _scatter(n, jj, coef * (ub + uc)) - _scatter(n, kk, coef * (ua + ub))
    return value, grad


def _shift(a, k):
    # np.roll along axis 0 for k = +-1, without its generic overhead
    return np.concatenate((a[-1:], a[:-1])) if k == 1 else np.concatenate((a[1:], a[:1]))


def area_and_gradient(vertices):
    """Signed shoelace area of a closed polygon and its vertex gradient."""
    pts = np.asarray(vertices, dtype=float)
    nxt = _shift(pts, -1)
    prv = _shift(pts, 1)
    value = 0.5 * float(np.sum(pts[:, 0] * nxt[:, 1] - nxt[:, 0] * pts[:, 1]))
    grad = 0.5 * np.column_stack((nxt[:, 1] - prv[:, 1], prv[:, 0] - nxt[:, 0]))
    return value, grad


def _w_and_gradient(pts):
    n = len(pts)
    e_in = pts - _shift(pts, 1)
    e_out = _shift(pts, -1) - pts
    cross = e_in[:, 0] * e_out[:, 1] - e_in[:, 1] * e_out[:, 0]
    dot = np.einsum("ij,ij->i", e_in, e_out)
    turn = np.arctan2(cross, dot)
    grad = np.zeros_like(pts)
    reflex = turn < 0
    if not np.any(reflex):
        return 0.0, grad
    expo = np.full(n, -np.inf)
    expo[reflex] = 1.0 / turn[reflex]
    active = reflex & (expo > _EXP_FLOOR)
    wi = np.where(active, np.exp(np.where(active, expo, 0.0)), 0.0)
    # interior angle alpha = pi - turn, so w_i = exp(1 / turn) and dw_i/dturn = -w_i / turn^2
    dw_dturn = np.where(active, -wi / np.where(active, turn, 1.0) ** 2, 0.0) / n
    # turn = angle(e_out) - angle(e_in)
    d_out = np.column_stack((-e_out[:, 1], e_out[:, 0])) / np.einsum("ij,ij->i", e_out, e_out)[:, None]
    d_in = np.column_stack((-e_in[:, 1], e_in[:, 0])) / np.einsum("ij,ij->i", e_in, e_in)[:, None]
    s = dw_dturn[:, None]
    grad += _shift(s * d_out, 1)  # v_{i+1}
    grad -= s * (d_out + d_in)  # v_i
    grad += _shift(s * d_in, -1)  # v_{i-1}
    return float(wi.sum() / n), grad


def _pull_back(grad_vertices, rho, theta):
    """Chain rule from vertex gradient to (d/d rho, d/d theta) of the embedding."""
    angles = np.concatenate(([0.0], theta))
    c, s = np.cos(angles), np.sin(angles)
    suffix = np.cumsum(grad_vertices[::-1], axis=0)[::-1][1:]
    g_rho = c * suffix[:, 0] + s * suffix[:, 1]
    g_theta = rho[1:] * (-s[1:] * suffix[1:, 0] + c[1:] * suffix[1:, 1])
    return g_rho, g_theta


def _require_positive_cycle(pts):
    if not geom.is_simple(pts, closed=True):
        raise InvalidInput("polygon is not simple")
    if geom.signed_area(pts) <= 0:
        raise InvalidInput("polygon is not positively oriented")


def area_theta(state):
    """Area of a cycle state and its gradient in the state's angle coordinates."""
    pts = embed(state)
    _require_positive_cycle(pts)
    value, g = area_and_gradient(pts)
    rho = state.lengths[:-1] if isinstance(state, CycleChart) else state.rho
    _, g_theta = _pull_back(g, rho, state.theta)
    return value, g_theta


def nonconvexity_w(state):
    """Average of ``exp(1 / (pi - alpha_i))`` over reflex interior angles, with chart gradient.

    For a :class:`CycleChart` the gradient is in ``theta``; for an
    :class:`ArmChart` (cycle configuration) it is in ``(rho, theta)``.
    """
    pts = embed(state)
    _require_positive_cycle(pts)
    value, g = _w_and_gradient(pts)
    if isinstance(state, CycleChart):
        return value, _pull_back(g, state.lengths[:-1], state.theta)[1]
    g_rho, g_theta = _pull_back(g, state.rho, state.theta)
    return value, np.concatenate((g_rho, g_theta))


def area_lambda(lengths, lambdas, triangulation: geom.Triangulation):
    """Triangulated area in side/diagonal-length coordinates.

    ``lengths[i]`` is side ``(i, i+1)``; ``lambdas`` follow the order of
    ``triangulation.diagonals``.  Returns ``(A, dA/dlambda, d2A/dlambda2)``
    assembled triangle by triangle from the closed-form partials.
    """
    lengths = np.asarray(lengths, dtype=float)
    lambdas = np.asarray(lambdas, dtype=float)
    n = triangulation.n_vertices
    if len(lengths) != n or len(lambdas) != len(triangulation.diagonals):
        raise InvalidInput("lengths/lambdas do not match the triangulation")
    edge_len = {tuple(sorted((i, (i + 1) % n))): float(lengths[i]) for i in range(n)}
    diag_index = {d: k for k, d in enumerate(triangulation.diagonals)}
    for d, k in diag_index.items():
        edge_len[d] = float(lambdas[k])
    nd = len(lambdas)
    area = 0.0
    grad = np.zeros(nd)
    hess = np.zeros((nd, nd))
    for tri in triangulation.triangles:
        sides = [tuple(sorted((tri[(k + 1) % 3], tri[(k + 2) % 3]))) for k in range(3)]
        ls = [edge_len[e] for e in sides]
        geom._check_triangle(*ls)
        area += geom.heron_area(*ls)
        for a in range(3):
            ia = diag_index.get(sides[a])
            if ia is None:
                continue
            b, c = (a + 1) % 3, (a + 2) % 3
            d1, d2, _ = geom.triangle_area_partials(ls[a], ls[b], ls[c])
            grad[ia] += d1
            hess[ia, ia] += d2
            for o in (b, c):
                io = diag_index.get(sides[o])
                if io is None:
                    continue
                rest = 3 - a - o
                hess[ia, io] += geom.triangle_area_partials(ls[a], ls[o], ls[rest])[2]
    return area, grad, hess


def h_straight(rho):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise InvalidInput("lengths must be positive")
    logs = np.log(rho)
    return float(np.sum(logs**2)), 2.0 * logs / rho


def h_cocircular(lengths):
    """``log^2 L - sum_i log sin(2 pi l_i / L)`` with ``L`` the perimeter."""
    lengths = geom.check_c1(lengths)
    total = float(lengths.sum())
    arg = 2.0 * math.pi * lengths / total
    value = math.log(total) ** 2 - float(np.sum(np.log(np.sin(arg))))
    cot = np.cos(arg) / np.sin(arg)
    grad = 2.0 * math.log(total) / total - (2.0 * math.pi / total) * (cot - float(cot @ lengths) / total)
    return value, grad


def cocircular_area(lengths):
    """Area of the cyclic polygon with these sides and its gradient in the sides.

    At the cyclic polygon every diagonal derivative of the area vanishes, so
    the total derivative in side ``i`` is the partial at fixed diagonals,
    ``R cos(phi_i / 2)`` with ``phi_i`` the central angle of that side.
    """
    sol = geom.cocircular_polygon(lengths)
    return sol.area, sol.radius * np.cos(0.5 * sol.central_angles), sol


def project_straight(chart: ArmChart) -> ArmChart:
    return ArmChart(chart.rho, np.zeros_like(chart.theta))


def project_cocircular(state):
    """Cyclic polygon with the same side lengths, in the same chart type as ``state``."""
    pts = embed(state)
    _require_positive_cycle(pts)
    sides = np.hypot(*(np.roll(pts, -1, axis=0) - pts).T)
    if isinstance(state, CycleChart):
        sides = state.lengths
    sol = geom.cocircular_polygon(sides)
    d = np.diff(sol.vertices, axis=0)
    directions = np.arctan2(d[:, 1], d[:, 0])
    theta = wrap_angles(directions[1:] - directions[0])
    if isinstance(state, CycleChart):
        return CycleChart(state.lengths, theta)
    return ArmChart(sides[:-1], theta)


@dataclass(frozen=True)
class BumpParams:
    a: float
    b: float

    def __post_init__(self):
        if not (self.a < self.b):
            raise InvalidParams(f"bump parameters need a < b, got a={self.a}, b={self.b}")

    @classmethod
    def for_endpoints(cls, f0: float, f1: float = -math.inf) -> "BumpParams":
        a = 1.0 + max(f0, f1)
        return cls(a, a + 1.0)


def bump_eta(params: BumpParams, x: float):
    """Smooth cutoff equal to 1 up to ``a`` and 0 from ``b`` on; returns (value, derivative)."""
    if not isinstance(params, BumpParams):
        params = BumpParams(*params)
    a, b = params.a, params.b
    if x <= a:
        return 1.0, 0.0
    if x >= b:
        return 0.0, 0.0
    value = math.exp((x - a) / (x - b))
    return value, value * (a - b) / (x - b) ** 2


# --------------------------------------------------------------------------
# composite Lyapunov-Reeb fields


class ScalarField:
    """A smooth function on one moduli space, evaluated in flat chart vectors.

    Every public method also accepts a chart state in place of a vector.
    """

    kind: LinkageKind

    def __init__(self, lengths=None):
        self.lengths = None if lengths is None else np.asarray(lengths, dtype=float)

    # -- conversions
    def to_vector(self, state) -> np.ndarray:
        if isinstance(state, (ArmChart, CycleChart)):
            return chart_vector(state, self.kind)
        return np.asarray(state, dtype=float)

    def to_state(self, x):
        if isinstance(x, (ArmChart, CycleChart)):
            return x
        return state_from_vector(self.kind, x, self.lengths)

    def angle_slice(self, x) -> slice:
        return slice(0, None)

    def wrap(self, x) -> np.ndarray:
        x = np.array(x, dtype=float)
        sl = self.angle_slice(x)
        x[sl] = wrap_angles(x[sl])
        return x

    def vertices(self, x) -> np.ndarray:
        if isinstance(x, (ArmChart, CycleChart)):
            return embed(x)
        x = np.asarray(x, dtype=float)
        if self.kind is LinkageKind.ARM_LINKAGE:
            return _chain_points(self.lengths, x)
        if self.kind is LinkageKind.CYCLE_LINKAGE:
            return _chain_points(self.lengths[:-1], x)
        n_rho = (len(x) + 1) // 2
        return _chain_points(x[:n_rho], x[n_rho:])

    def admissible(self, x) -> bool:
        raise NotImplementedError

    constraint = None

    # -- evaluation
    def value_and_gradient(self, x):
        raise NotImplementedError

    def value(self, x) -> float:
        return self.value_and_gradient(self.to_vector(x))[0]

    def gradient(self, x) -> np.ndarray:
        return self.value_and_gradient(self.to_vector(x))[1]

    def __call__(self, x) -> float:
        return self.value(x)


class ArmLinkageField(ScalarField):
    """Strain energy of an arm with fixed edge lengths, in the edge directions."""

    kind = LinkageKind.ARM_LINKAGE

    def __init__(self, lengths):
        super().__init__(lengths)
        if self.lengths is None or np.any(self.lengths <= 0):
            raise InvalidInput("arm linkage needs positive lengths")

    def admissible(self, x) -> bool:
        return geom.is_simple(self.vertices(x), closed=False)

    def value_and_gradient(self, x):
        x = self.to_vector(x)
        pts = self.vertices(x)
        value, g = strain_energy(pts, closed=False)
        return value, _pull_back(g, self.lengths, x)[1]


class ArmConfigField(ScalarField):
    """``Phi(rho, theta) - Phi(rho, 0) + sum log^2 rho`` on free arms."""

    kind = LinkageKind.ARM_CONFIG

    def angle_slice(self, x):
        return slice((len(x) + 1) // 2, None)

    def admissible(self, x) -> bool:
        x = self.to_vector(x)
        n_rho = (len(x) + 1) // 2
        if np.any(x[:n_rho] <= 0):
            return False
        return geom.is_simple(self.vertices(x), closed=False)

    def value_and_gradient(self, x):
        x = self.to_vector(x)
        n_rho = (len(x) + 1) // 2
        rho, theta = x[:n_rho], x[n_rho:]
        pts = self.vertices(x)
        phi, g = strain_energy(pts, closed=False)
        g_rho, g_theta = _pull_back(g, rho, theta)
        straight = np.zeros((n_rho + 1, 2))
        straight[1:, 0] = np.cumsum(rho)
        phi0, g0 = strain_energy(straight, closed=False)
        g0_rho = np.cumsum(g0[::-1, 0])[::-1][1:]
        h, gh = h_straight(rho)
        return phi - phi0 + h, np.concatenate((g_rho - g0_rho + gh, g_theta))


class CycleLinkageField(ScalarField):
    """``1/A + w Phi`` on cycles with fixed side lengths, in the directions ``theta``."""

    kind = LinkageKind.CYCLE_LINKAGE

    def __init__(self, lengths):
        super().__init__(geom.check_c1(lengths))

    def admissible(self, x) -> bool:
        pts = self.vertices(x)
        return geom.is_simple(pts, closed=True) and geom.signed_area(pts) > 0

    def constraint(self, x):
        return cycle_constraint(self.to_vector(x), self.lengths)

    def value_and_gradient(self, x):
        x = self.to_vector(x)
        pts = self.vertices(x)
        area, g_area = area_and_gradient(pts)
        if area <= 0:
            raise InvalidInput("polygon is not positively oriented")
        w, g_w = _w_and_gradient(pts)
        value = 1.0 / area
        g = -g_area / area**2
        if w > 0:
            phi, g_phi = strain_energy(pts, closed=True)
            value += w * phi
            g = g + w * g_phi + phi * g_w
        return value, _pull_back(g, self.lengths[:-1], x)[1]


class CycleConfigField(ScalarField):
    """``1/A - 1/A(tau) + w Phi + h(tau)`` on free simple polygons, in ``(rho, theta)``."""

    kind = LinkageKind.CYCLE_CONFIG

    def angle_slice(self, x):
        return slice((len(x) + 1) // 2, None)

    def admissible(self, x) -> bool:
        x = self.to_vector(x)
        n_rho = (len(x) + 1) // 2
        if np.any(x[:n_rho] <= 0):
            return False
        pts = self.vertices(x)
        return geom.is_simple(pts, closed=True) and geom.signed_area(pts) > 0

    def value_and_gradient(self, x):
        x = self.to_vector(x)
        n_rho = (len(x) + 1) // 2
        rho, theta = x[:n_rho], x[n_rho:]
        pts = self.vertices(x)
        area, g_area = area_and_gradient(pts)
        if area <= 0:
            raise InvalidInput("polygon is not positively oriented")
        closing_vec = pts[-1] - pts[0]
        closing = math.hypot(*closing_vec)
        sides = np.append(rho, closing)
        a_tau, ga_tau, _ = cocircular_area(sides)
        h, gh = h_cocircular(sides)
        w, g_w = _w_and_gradient(pts)
        value = 1.0 / area - 1.0 / a_tau + h
        g = -g_area / area**2
        if w > 0:
            phi, g_phi = strain_energy(pts, closed=True)
            value += w * phi
            g = g + w * g_phi + phi * g_w
        g_sides = ga_tau / a_tau**2 + gh
        unit = closing_vec / closing
        g[-1] += g_sides[-1] * unit
        g[0] -= g_sides[-1] * unit
        g_rho, g_theta = _pull_back(g, rho, theta)
        return value, np.concatenate((g_rho + g_sides[:-1], g_theta))


_FIELDS = {
    LinkageKind.ARM_LINKAGE: ArmLinkageField,
    LinkageKind.ARM_CONFIG: ArmConfigField,
    LinkageKind.CYCLE_LINKAGE: CycleLinkageField,
    LinkageKind.CYCLE_CONFIG: CycleConfigField,
}


def lr_function(kind, lengths=None) -> ScalarField:
    """The Lyapunov-Reeb function for ``kind``; linkage kinds need their fixed lengths."""
    kind = LinkageKind(kind)
    if kind.fixed_lengths:
        if lengths is None:
            raise InvalidInput(f"{kind.value} needs a length vector")
        return _FIELDS[kind](lengths)
    return _FIELDS[kind]()
