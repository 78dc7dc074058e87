"""Seeded random instances: triangles, feasible length vectors, polygons and arms.

Every generator takes a ``numpy.random.Generator`` so that suites built on
them are reproducible from a single seed.
"""
from __future__ import annotations

import math

import numpy as np

from . import geom
from .chart import ArmChart, CycleChart, arm_embed, arm_extract, cycle_constraint, cycle_embed, cycle_extract

__all__ = [
    "clearance",
    "random_triangle",
    "random_c1_lengths",
    "random_convex_polygon",
    "random_simple_polygon",
    "random_arm",
    "random_cycle_linkage",
    "random_cycle_config",
    "random_walk_cycle",
]

MAX_TRIES = 10_000


def _point_segment(p, a, b):
    ab = b - a
    t = np.clip(((p - a) @ ab) / (ab @ ab), 0.0, 1.0)
    return float(np.hypot(*(a + t * ab - p)))


def clearance(vertices, closed: bool = True) -> float:
    """Smallest vertex-to-non-incident-edge distance, relative to the mean edge length."""
    pts = geom.as_points(vertices)
    n = len(pts)
    edges = [(i, i + 1) for i in range(n - 1)] + ([(n - 1, 0)] if closed else [])
    if not edges:
        return math.inf
    mean_edge = float(np.mean([np.hypot(*(pts[j] - pts[i])) for i, j in edges]))
    best = math.inf
    for i, j in edges:
        for k in range(n):
            if k != i and k != j:
                best = min(best, _point_segment(pts[k], pts[i], pts[j]))
    return best / mean_edge


def random_triangle(rng, min_angle: float = 0.05):
    """Side lengths of a triangle whose smallest angle exceeds ``min_angle``."""
    for _ in range(MAX_TRIES):
        angles = rng.dirichlet(np.ones(3)) * math.pi
        if angles.min() > min_angle:
            scale = rng.uniform(0.2, 5.0)
            return tuple(float(scale * math.sin(a)) for a in angles)
    raise RuntimeError("could not draw a triangle")


def random_c1_lengths(rng, m: int, spread: float = 3.0) -> np.ndarray:
    """Positive lengths with every entry below the sum of the others."""
    for _ in range(MAX_TRIES):
        lengths = rng.uniform(1.0, spread, m)
        total = lengths.sum()
        if np.all(lengths < 0.98 * (total - lengths)):
            return lengths
    raise RuntimeError("could not draw feasible lengths")


def random_convex_polygon(rng, m: int) -> np.ndarray:
    """Vertices of a strictly convex polygon, counterclockwise, on a random ellipse."""
    for _ in range(MAX_TRIES):
        gaps = rng.uniform(0.3, 1.0, m)
        ang = np.cumsum(gaps / gaps.sum() * 2.0 * math.pi)
        a, b = rng.uniform(0.5, 2.0, 2)
        rot = rng.uniform(0, 2 * math.pi)
        pts = np.column_stack((a * np.cos(ang), b * np.sin(ang)))
        c, s = math.cos(rot), math.sin(rot)
        pts = pts @ np.array([[c, s], [-s, c]])
        if np.all(geom.turning_angles(pts) > 1e-3):
            return pts
    raise RuntimeError("could not draw a convex polygon")


def random_simple_polygon(rng, m: int, min_clearance: float = 0.05) -> np.ndarray:
    """Counterclockwise simple polygon (star-shaped about the origin) with some clearance."""
    for _ in range(MAX_TRIES):
        ang = np.sort(rng.uniform(0.0, 2.0 * math.pi, m))
        r = rng.uniform(0.3, 1.5, m)
        pts = np.column_stack((r * np.cos(ang), r * np.sin(ang)))
        if geom.is_simple(pts) and geom.signed_area(pts) > 0 and clearance(pts) > min_clearance:
            return pts
    raise RuntimeError("could not draw a simple polygon")


def random_arm(rng, m: int, lengths=None, max_turn: float = 2.5, min_clearance: float = 0.05) -> ArmChart:
    """Self-avoiding arm with ``m`` vertices and random turning angles."""
    rho = rng.uniform(0.5, 1.5, m - 1) if lengths is None else np.asarray(lengths, dtype=float)
    for _ in range(MAX_TRIES):
        turns = rng.uniform(-max_turn, max_turn, m - 2)
        arm = ArmChart(rho, np.cumsum(turns))
        pts = arm_embed(arm)
        if geom.is_simple(pts, closed=False) and clearance(pts, closed=False) > min_clearance:
            return arm
    raise RuntimeError("could not draw a self-avoiding arm")


def random_cycle_linkage(rng, m: int, min_clearance: float = 0.05):
    return cycle_extract(random_simple_polygon(rng, m, min_clearance))


def random_cycle_config(rng, m: int, min_clearance: float = 0.05):
    return arm_extract(random_simple_polygon(rng, m, min_clearance))


def _close(theta, lengths, tol=1e-12, iters=20):
    # Newton along the closure gradient back onto u = 0
    for _ in range(iters):
        u, a = cycle_constraint(theta, lengths)
        if abs(u) < tol * lengths[-1]:
            return theta
        aa = float(a @ a)
        if aa < 1e-12:
            return None
        theta = theta - u * a / aa
    return None


def random_walk_cycle(rng, start: CycleChart, steps: int = 30, sigma: float = 0.3,
                      min_clearance: float = 0.05) -> CycleChart:
    """Another simple cycle with the same lengths, reached by a random walk in the angle chart."""
    lengths = start.lengths
    theta = np.array(start.theta, dtype=float)
    taken = 0
    for _ in range(MAX_TRIES):
        if taken == steps:
            break
        trial = _close(theta + rng.normal(scale=sigma, size=theta.shape), lengths)
        if trial is None:
            continue
        pts = cycle_embed(CycleChart(lengths, trial))
        if geom.is_simple(pts) and geom.signed_area(pts) > 0 and clearance(pts) > min_clearance:
            theta, taken = trial, taken + 1
    return CycleChart(lengths, theta)
