import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from linkfold import geom, sampling
from linkfold.errors import DegenerateTriangle, InfeasibleLengths, InvalidInput

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
BOWTIE = np.array([[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]])

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def polygon(seed, m=None):
    rng = np.random.default_rng(seed)
    return sampling.random_simple_polygon(rng, m or int(rng.integers(3, 10)), min_clearance=0.0)


def test_signed_area_square():
    assert geom.signed_area(SQUARE) == pytest.approx(1.0)
    assert geom.signed_area(SQUARE[::-1]) == pytest.approx(-1.0)


def test_simple_and_bowtie():
    assert geom.is_simple(SQUARE)
    assert not geom.is_simple(BOWTIE)
    assert geom.is_simple(BOWTIE[[0, 2, 1, 3]])


def test_open_chain_touching_itself():
    chain = np.array([[0, 0], [2, 0], [2, 1], [1, 1], [1, 0]], dtype=float)
    assert not geom.is_simple(chain, closed=False)
    assert geom.is_simple(chain[:4], closed=False)


def test_repeated_vertex_is_not_simple():
    assert not geom.is_simple([[0, 0], [1, 0], [1, 0], [0, 1]])


@given(seeds, st.floats(0, 2 * math.pi), st.floats(0.01, 100))
def test_simplicity_invariant_under_similarity(seed, angle, scale):
    pts = polygon(seed)
    c, s = math.cos(angle), math.sin(angle)
    moved = scale * pts @ np.array([[c, s], [-s, c]]) + np.array([3.0, -7.0])
    assert geom.is_simple(moved)
    assert geom.signed_area(moved) == pytest.approx(scale**2 * geom.signed_area(pts), rel=1e-9)


def test_turning_angles_sum_to_two_pi():
    pts = polygon(7, 8)
    assert np.sum(geom.turning_angles(pts)) == pytest.approx(2 * math.pi)
    assert np.sum(geom.interior_angles(pts)) == pytest.approx((8 - 2) * math.pi)


def test_interior_angles_reject_clockwise():
    with pytest.raises(InvalidInput):
        geom.interior_angles(SQUARE[::-1])


@given(seeds, st.booleans())
def test_triangulation_covers_polygon(seed, lawson):
    pts = polygon(seed)
    tri = geom.triangulate(pts, lawson=lawson)
    tri.check()
    total = sum(geom.signed_area(pts[list(t)]) for t in tri.triangles)
    assert total == pytest.approx(geom.signed_area(pts), rel=1e-9)
    assert all(geom.signed_area(pts[list(t)]) > 0 for t in tri.triangles)


@given(seeds)
def test_lawson_flips_leave_only_lawson_edges(seed):
    pts = polygon(seed)
    tri = geom.triangulate(pts, lawson=True)
    for d, (beta, gamma) in geom.opposite_angles(pts, tri).items():
        # sorted indices keep the polygon's cyclic order
        quad = sorted({v for t in tri.triangles if set(d) <= set(t) for v in t})
        # a flip is only available when the quadrilateral is convex
        if all(a > 0 for a in geom.turning_angles(pts[quad])):
            assert beta + gamma <= math.pi + 1e-9


def test_fan_triangulation_shape():
    tri = geom.fan_triangulation(6)
    tri.check()
    assert len(tri.diagonals) == 3 and all(4 in d for d in tri.diagonals)
    with pytest.raises(InvalidInput):
        geom.fan_triangulation(2)


def test_triangulate_rejects_bowtie():
    with pytest.raises(InvalidInput):
        geom.triangulate(BOWTIE)


@given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.05, 0.95))
def test_heron_matches_coordinates(a, b, frac):
    gamma = frac * math.pi
    c = math.sqrt(a * a + b * b - 2 * a * b * math.cos(gamma))
    assert geom.heron_area(a, b, c) == pytest.approx(0.5 * a * b * math.sin(gamma), rel=1e-9)


def test_degenerate_triangle_rejected():
    with pytest.raises(DegenerateTriangle):
        geom.triangle_area_partials(2.0, 1.0, 1.0)


@given(seeds)
def test_area_partials_against_central_differences(seed):
    l = np.array(sampling.random_triangle(np.random.default_rng(seed), min_angle=0.2))
    d1, d2, d12 = geom.triangle_area_partials(*l)
    h = 1e-4 * min(l)
    area = lambda x, y: geom.heron_area(x, y, l[2])
    assert d1 == pytest.approx((area(l[0] + h, l[1]) - area(l[0] - h, l[1])) / (2 * h), rel=1e-6)
    assert d2 == pytest.approx(
        (area(l[0] + h, l[1]) - 2 * area(*l[:2]) + area(l[0] - h, l[1])) / h**2, rel=1e-4, abs=1e-6
    )
    mixed = (area(l[0] + h, l[1] + h) - area(l[0] + h, l[1] - h) - area(l[0] - h, l[1] + h)
             + area(l[0] - h, l[1] - h)) / (4 * h * h)
    assert d12 == pytest.approx(mixed, rel=1e-4, abs=1e-6)


def test_check_c1():
    assert np.allclose(geom.check_c1([1, 1, 1.5]), [1, 1, 1.5])
    for bad in ([1, 1, 2], [1, 1, 3], [1, -1, 1], [1, 1]):
        with pytest.raises(InfeasibleLengths):
            geom.check_c1(bad)


def test_cocircular_right_triangle_and_regular():
    sol = geom.cocircular_polygon([3.0, 4.0, 5.0])
    assert sol.radius == pytest.approx(2.5, abs=1e-12)
    for m in range(3, 10):
        assert geom.cocircular_polygon(np.ones(m)).radius == pytest.approx(1 / (2 * math.sin(math.pi / m)), abs=1e-12)


def test_cocircular_center_outside():
    sol = geom.cocircular_polygon([3.5, 1, 1, 1, 1])
    assert not sol.center_inside
    sides = np.hypot(*(np.roll(sol.vertices, -1, 0) - sol.vertices).T)
    assert np.allclose(sides, [3.5, 1, 1, 1, 1], atol=1e-10)
    assert geom.signed_area(sol.vertices) == pytest.approx(sol.area)


@given(seeds)
def test_cocircular_vertices_on_circle(seed):
    rng = np.random.default_rng(seed)
    lengths = sampling.random_c1_lengths(rng, int(rng.integers(3, 12)), spread=5.0)
    sol = geom.cocircular_polygon(lengths)
    assert np.allclose(np.hypot(*(sol.vertices - sol.center).T), sol.radius, rtol=1e-9)
    assert geom.circumcircle_residual(sol.vertices) < 1e-9
    assert geom.is_simple(sol.vertices)


def test_circumcircle_residual_detects_non_concyclic():
    assert geom.circumcircle_residual(SQUARE) < 1e-12
    assert geom.circumcircle_residual([[0, 0], [2, 0], [2, 1], [0, 2]]) > 1e-3
