"""Seeded property suite behind ``linkfold verify``.

Each check draws its own instances from one ``numpy`` generator, compares
the library against an independent oracle (finite differences, a direct
geometric recomputation, or the flow's own invariants) and reports a
pass/fail line.  ``scale`` multiplies the instance counts.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import geom, sampling
from .chart import LinkageKind, arm_embed, chart_distance, cycle_constraint, embed, validate
from .energy import BumpParams, area_lambda, lr_function, nonconvexity_w
from .flow import FlowOptions, bump_flow, expansive_monitor, gradient_flow, projected_flow
from .refold import RefoldOptions, pullback_error, refold

__all__ = ["CheckResult", "CHECKS", "run_suite"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail} ({self.seconds:.2f}s)"


def _fd(fun, x, h):
    # fourth-order central difference
    return (-fun(x + 2 * h) + 8 * fun(x + h) - 8 * fun(x - h) + fun(x - 2 * h)) / (12 * h)


def _slack(a, b, c):
    return min(b + c - a, a + c - b, a + b - c)


def check_triangle_calculus(rng, n):
    worst = 0.0
    for _ in range(n):
        l = np.array(sampling.random_triangle(rng))
        area = geom.heron_area(*l)
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            d1, d2, dij = geom.triangle_area_partials(l[i], l[j], l[k])

            def a_i(t, i=i):
                m = l.copy()
                m[i] = t
                return geom.heron_area(*m)

            h = 0.01 * _slack(*l)
            fd1 = _fd(a_i, l[i], h)
            fd2 = _fd(lambda t: _fd(a_i, t, h), l[i], h)

            def a_ij(si, sj, i=i, j=j):
                m = l.copy()
                m[i], m[j] = si, sj
                return geom.heron_area(*m)

            fdij = _fd(lambda t: _fd(lambda s: a_ij(s, t), l[i], h), l[j], h)
            scale1, scale2 = area / l[i], area / l[i] ** 2
            worst = max(
                worst,
                abs(fd1 - d1) / max(abs(d1), scale1),
                abs(fd2 - d2) / max(abs(d2), scale2),
                abs(fdij - dij) / max(abs(dij), area / (l[i] * l[j])),
            )
    return worst < 1e-6, f"max relative error {worst:.2e} over {n} triangles"


def _fan_area(edge_len, tri):
    return sum(geom.heron_area(*(edge_len[tuple(sorted((t[a], t[b])))] for a, b in ((0, 1), (1, 2), (2, 0))))
               for t in tri.triangles)


def check_fan_calculus(rng, n):
    worst = 0.0
    for _ in range(n):
        m = int(rng.integers(4, 9))
        pts = sampling.random_convex_polygon(rng, m)
        tri = geom.fan_triangulation(m)
        lengths = np.hypot(*(np.roll(pts, -1, 0) - pts).T)
        lam = np.array([np.hypot(*(pts[a] - pts[b])) for a, b in tri.diagonals])
        _, grad, hess = area_lambda(lengths, lam, tri)
        base = {tuple(sorted((i, (i + 1) % m))): lengths[i] for i in range(m)}
        angles = geom.opposite_angles(pts, tri)

        def area_of(v):
            e = dict(base)
            e.update({d: v[k] for k, d in enumerate(tri.diagonals)})
            return _fan_area(e, tri)

        scale = area_of(lam) / float(np.mean(lam))
        edge = dict(base)
        edge.update(zip(tri.diagonals, lam))
        h = 0.01 * min(_slack(*(edge[tuple(sorted((t[a], t[b])))] for a, b in ((0, 1), (1, 2), (2, 0))))
                       for t in tri.triangles)
        for k, d in enumerate(tri.diagonals):
            beta, gamma = angles[d]
            formula = 0.5 * lam[k] * (1 / math.tan(beta) + 1 / math.tan(gamma))
            unit = np.eye(len(lam))[k]
            fd = _fd(lambda t: area_of(lam + t * unit), 0.0, h)
            worst = max(worst, abs(fd - grad[k]) / max(abs(grad[k]), scale),
                        abs(formula - grad[k]) / max(abs(grad[k]), scale))
            for q in range(len(lam)):
                u2 = np.eye(len(lam))[q]
                fdh = _fd(lambda t: _fd(lambda s: area_of(lam + s * unit + t * u2), 0.0, h), 0.0, h)
                worst = max(worst, abs(fdh - hess[k, q]) / max(abs(hess[k, q]), scale / lam[k]))
    return worst < 1e-6, f"max relative error {worst:.2e} over {n} fans"


def check_cocircular_hessian(rng, n):
    worst = -math.inf
    for _ in range(n):
        m = int(rng.integers(4, 9))
        lengths = sampling.random_c1_lengths(rng, m)
        sol = geom.cocircular_polygon(lengths)
        tri = geom.fan_triangulation(m)
        lam = np.array([np.hypot(*(sol.vertices[a] - sol.vertices[b])) for a, b in tri.diagonals])
        _, _, hess = area_lambda(lengths, lam, tri)
        eig = np.linalg.eigvalsh(0.5 * (hess + hess.T))
        worst = max(worst, float(eig.max()) / float(np.linalg.norm(hess)))
    return worst < -1e-9, f"largest normalized eigenvalue {worst:.3e} over {n} length vectors"


def check_cocircular_solver(rng, n):
    worst_sum = worst_eq = 0.0
    for _ in range(n):
        m = int(rng.integers(3, 9))
        lengths = sampling.random_c1_lengths(rng, m)
        sol = geom.cocircular_polygon(lengths)
        worst_sum = max(worst_sum, abs(float(np.sum(sol.central_angles)) - 2 * math.pi))
        dist = np.hypot(*(sol.vertices - sol.center).T)
        sides = np.hypot(*(np.roll(sol.vertices, -1, 0) - sol.vertices).T)
        worst_eq = max(worst_eq, float(np.max(np.abs(dist - sol.radius))) / sol.radius,
                       float(np.max(np.abs(sides - lengths))) / sol.radius)
    regular = max(abs(geom.cocircular_polygon(np.ones(m)).radius - 1 / (2 * math.sin(math.pi / m)))
                  for m in range(3, 13))
    right = abs(geom.cocircular_polygon([3.0, 4.0, 5.0]).radius - 2.5)
    ok = worst_sum < 1e-10 and worst_eq < 1e-9 and regular < 1e-12 and right < 1e-12
    return ok, (f"angle sum {worst_sum:.1e}, equidistance {worst_eq:.1e}, regular {regular:.1e}, "
                f"(3,4,5) {right:.1e}")


def check_max_area(rng, n):
    worst = math.inf
    for _ in range(n):
        m = int(rng.integers(3, 9))
        pts = sampling.random_simple_polygon(rng, m)
        sides = np.hypot(*(np.roll(pts, -1, 0) - pts).T)
        worst = min(worst, geom.cocircular_polygon(sides).area - geom.signed_area(pts))
    return worst >= -1e-12, f"min A(tau) - A {worst:.3e} over {n} polygons"


def _monotone(f_values, slack=1e-9):
    f = np.asarray(f_values)
    return bool(np.all(np.diff(f) <= slack * np.maximum(1.0, np.abs(f[:-1]))))


def check_straighten(rng, n):
    worst, ok = 0.0, True
    for _ in range(n):
        arm = sampling.random_arm(rng, int(rng.integers(3, 9)))
        traj = gradient_flow(lr_function(LinkageKind.ARM_LINKAGE, arm.rho), arm, FlowOptions(step=2.0))
        worst = max(worst, float(np.max(np.abs(traj.final.theta))) if arm.m > 2 else 0.0)
        ok &= _monotone(traj.f_values) and all(geom.is_simple(arm_embed(s), closed=False) for s in traj.frames)
    return ok and worst < 1e-3, f"max |theta(T)| {worst:.2e} over {n} arms"


def check_convexify(rng, n):
    worst_res = worst_u = 0.0
    ok = True
    for _ in range(n):
        start = sampling.random_cycle_linkage(rng, int(rng.integers(4, 9)))
        fld = lr_function(LinkageKind.CYCLE_LINKAGE, start.lengths)
        traj = projected_flow(fld, start, FlowOptions(step=8.0, grad_tol=1e-8))
        worst_res = max(worst_res, geom.circumcircle_residual(embed(traj.final)))
        worst_u = max(worst_u, max(abs(cycle_constraint(s.theta, s.lengths)[0]) for s in traj.frames)
                      / start.lengths[-1])
        ok &= _monotone(traj.f_values) and all(validate(LinkageKind.CYCLE_LINKAGE, s) for s in traj.frames)
    return ok and worst_res < 1e-4 and worst_u < 1e-8, f"residual {worst_res:.2e}, |u|/l_m {worst_u:.1e}"


def check_config_flow(rng, n):
    worst = 0.0
    for _ in range(n):
        m = int(rng.integers(3, 6))
        start = sampling.random_cycle_config(rng, m)
        traj = gradient_flow(lr_function(LinkageKind.CYCLE_CONFIG), start, FlowOptions(grad_tol=1e-4))
        pts = embed(traj.final)
        sides = np.hypot(*(np.roll(pts, -1, 0) - pts).T)
        total = sides.sum()
        worst = max(worst, geom.circumcircle_residual(pts), abs(total - 1), float(np.max(np.abs(sides / total - 1 / m))))
    return worst < 1e-3, f"worst concyclic/proportion error {worst:.2e} over {n} polygons"


def check_bump_identity(rng, n):
    worst = 0.0
    fixed = True
    for _ in range(n):
        arm = sampling.random_arm(rng, int(rng.integers(3, 8)))
        fld = lr_function(LinkageKind.ARM_LINKAGE, arm.rho)
        params = BumpParams.for_endpoints(fld.value(arm))
        for s in (0.1, 0.5, 1.0):
            back = bump_flow(fld, params, bump_flow(fld, params, arm, s), -s)
            worst = max(worst, chart_distance(arm, back))
        high = BumpParams(params.a - 3.0, params.a - 2.0)
        fixed &= np.array_equal(bump_flow(fld, high, arm, 0.7).theta, arm.theta)
    return worst < 1e-5 and fixed, f"max round-trip distance {worst:.2e}, fixed points exact: {fixed}"


def check_refold(rng, n):
    ok, worst_pb, worst_end = True, 0.0, 0.0
    for _ in range(n):
        m = int(rng.integers(4, 7))
        arm0 = sampling.random_arm(rng, m)
        arm1 = sampling.random_arm(rng, m, lengths=arm0.rho)
        motion = refold(arm0, arm1, RefoldOptions(samples=16))
        ok &= motion.all_valid
        worst_end = max(worst_end, chart_distance(motion.frames[0], arm0), chart_distance(motion.frames[-1], arm1))
        worst_pb = max(worst_pb, pullback_error(motion))
    return ok and worst_end < 1e-6 and worst_pb < 1e-4, f"endpoints {worst_end:.1e}, pull-back {worst_pb:.1e}"


def check_expansive_monotonicity(rng, n):
    seen = bad = 0
    for _ in range(n):
        start = sampling.random_cycle_linkage(rng, int(rng.integers(4, 8)))
        traj = projected_flow(lr_function(LinkageKind.CYCLE_LINKAGE, start.lengths), start,
                              FlowOptions(step=8.0, t_max=200.0))
        for a, b in zip(traj.frames[:-1], traj.frames[1:]):
            if expansive_monitor(a, b).expansive:
                seen += 1
                da = geom.signed_area(embed(b)) - geom.signed_area(embed(a))
                dw = nonconvexity_w(b)[0] - nonconvexity_w(a)[0]
                bad += da < -1e-9 or dw > 1e-9
    return bad == 0, f"{seen} expansive steps, {bad} violations"


CHECKS = [
    ("triangle-calculus", check_triangle_calculus, 100),
    ("fan-calculus", check_fan_calculus, 10),
    ("cocircular-hessian", check_cocircular_hessian, 20),
    ("cocircular-solver", check_cocircular_solver, 200),
    ("max-area", check_max_area, 200),
    ("straighten", check_straighten, 5),
    ("convexify", check_convexify, 4),
    ("config-flow", check_config_flow, 2),
    ("bump-identity", check_bump_identity, 3),
    ("refold", check_refold, 2),
    ("expansive-monotonicity", check_expansive_monotonicity, 3),
]


def run_suite(seed: int = 0, scale: float = 1.0, names=None) -> list:
    results = []
    for index, (name, fun, count) in enumerate(CHECKS):
        if names and name not in names:
            continue
        rng = np.random.default_rng([seed, index])
        t0 = time.perf_counter()
        try:
            passed, detail = fun(rng, max(1, int(round(count * scale))))
        except Exception as exc:  # a crash is a failed property, not a crashed suite
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(passed), detail, time.perf_counter() - t0))
    return results
