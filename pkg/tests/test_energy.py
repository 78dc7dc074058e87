import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from linkfold import geom, sampling
from linkfold.chart import ArmChart, CycleChart, LinkageKind, arm_extract, cycle_extract, embed
from linkfold.energy import (
    BumpParams,
    area_and_gradient,
    area_theta,
    bump_eta,
    cocircular_area,
    h_cocircular,
    h_straight,
    lr_function,
    nonconvexity_w,
    project_cocircular,
    project_straight,
    strain_energy,
)
from linkfold.errors import InvalidInput, InvalidParams, NearContact

from conftest import fd_gradient

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def regular(m, perimeter=1.0):
    ang = 2 * math.pi * np.arange(m) / m
    r = perimeter / (2 * m * math.sin(math.pi / m))
    return r * np.column_stack((np.cos(ang), np.sin(ang)))


def random_state(kind, seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(4, 8))
    if kind is LinkageKind.ARM_LINKAGE or kind is LinkageKind.ARM_CONFIG:
        return sampling.random_arm(rng, m)
    if kind is LinkageKind.CYCLE_LINKAGE:
        return sampling.random_cycle_linkage(rng, m)
    return sampling.random_cycle_config(rng, m)


@given(seeds)
def test_strain_gradient(seed):
    pts = sampling.random_simple_polygon(np.random.default_rng(seed), 6)
    _, grad = strain_energy(pts, closed=True)
    flat = lambda x: strain_energy(x.reshape(-1, 2), closed=True)[0]
    fd = fd_gradient(flat, pts.ravel(), h=1e-7).reshape(-1, 2)
    assert np.allclose(grad, fd, rtol=1e-5, atol=1e-5 * np.abs(fd).max())


def test_strain_raises_on_contact():
    touching = np.array([[0, 0], [2, 0], [2, 1], [1, 0], [0, 1]], dtype=float)
    with pytest.raises(NearContact):
        strain_energy(touching, closed=True)


def test_strain_grows_near_contact():
    far = strain_energy([[0, 0], [1, 0], [0.5, 1.0]], edges=[(0, 1)])[0]
    near = strain_energy([[0, 0], [1, 0], [0.5, 0.01]], edges=[(0, 1)])[0]
    assert near > 1e3 * far


@given(seeds)
def test_area_gradient(seed):
    pts = sampling.random_simple_polygon(np.random.default_rng(seed), 7)
    value, grad = area_and_gradient(pts)
    assert value == pytest.approx(geom.signed_area(pts))
    fd = fd_gradient(lambda x: area_and_gradient(x.reshape(-1, 2))[0], pts.ravel()).reshape(-1, 2)
    assert np.allclose(grad, fd, atol=1e-8)


@given(seeds)
def test_area_theta_gradient(seed):
    cyc = random_state(LinkageKind.CYCLE_LINKAGE, seed)
    _, g = area_theta(cyc)
    # the chart area ignores closure, so differentiate the open chain's shoelace area
    fd = fd_gradient(lambda t: geom.signed_area(embed(CycleChart(cyc.lengths, t))), cyc.theta)
    assert np.allclose(g, fd, atol=1e-7)


def test_w_vanishes_on_convex():
    value, grad = nonconvexity_w(cycle_extract(regular(6)))
    assert value == 0.0 and np.all(grad == 0)


@given(seeds)
def test_w_gradient(seed):
    conf = random_state(LinkageKind.CYCLE_CONFIG, seed)
    value, g = nonconvexity_w(conf)
    x = np.concatenate((conf.rho, conf.theta))
    n = len(conf.rho)
    fd = fd_gradient(lambda v: nonconvexity_w(ArmChart(v[:n], v[n:]))[0], x, h=1e-7)
    assert value >= 0
    assert np.allclose(g, fd, rtol=1e-5, atol=1e-7)


def test_h_functions():
    v, g = h_straight([1.0, 1.0])
    assert v == 0 and np.all(g == 0)
    v, g = h_cocircular(np.full(5, 0.2))
    assert np.allclose(g, 0, atol=1e-12)
    rng = np.random.default_rng(1)
    for _ in range(5):
        lengths = sampling.random_c1_lengths(rng, 5)
        assert h_cocircular(lengths)[0] > v
        assert np.allclose(h_cocircular(lengths)[1], fd_gradient(lambda l: h_cocircular(l)[0], lengths), atol=1e-6)


def test_cocircular_area_gradient():
    lengths = np.array([1.0, 1.3, 0.8, 1.1, 0.9])
    _, g, _ = cocircular_area(lengths)
    assert np.allclose(g, fd_gradient(lambda l: cocircular_area(l)[0], lengths), atol=1e-7)


def test_bump_eta():
    p = BumpParams(1.0, 2.0)
    assert bump_eta(p, 0.5) == (1.0, 0.0)
    assert bump_eta(p, 2.0) == (0.0, 0.0)
    vals = np.array([bump_eta(p, x)[0] for x in np.linspace(1.001, 1.999, 200)])
    # the tail underflows to zero just below b
    assert np.all(np.diff(vals) <= 0) and np.all((vals >= 0) & (vals < 1))
    assert np.all(np.diff(vals[:150]) < 0)
    for x in (1.2, 1.5, 1.9):
        h = 1e-6
        fd = (bump_eta(p, x + h)[0] - bump_eta(p, x - h)[0]) / (2 * h)
        assert bump_eta(p, x)[1] == pytest.approx(fd, rel=1e-6)
    with pytest.raises(InvalidParams):
        BumpParams(2.0, 2.0)
    assert BumpParams.for_endpoints(3.0, 5.0) == BumpParams(6.0, 7.0)


@pytest.mark.parametrize("kind", list(LinkageKind))
def test_lr_gradients(kind):
    for seed in range(4):
        state = random_state(kind, seed)
        lengths = state.lengths if isinstance(state, CycleChart) else state.rho
        fld = lr_function(kind, lengths if kind.fixed_lengths else None)
        x = fld.to_vector(state)
        g = fld.gradient(x)
        fd = fd_gradient(fld.value, x, h=1e-7)
        assert np.allclose(g, fd, rtol=1e-5, atol=1e-6 * max(1.0, np.abs(fd).max()))


def test_linkage_kinds_need_lengths():
    with pytest.raises(InvalidInput):
        lr_function(LinkageKind.CYCLE_LINKAGE)


def test_critical_points():
    straight = ArmChart(np.ones(4), np.zeros(3))
    assert np.allclose(lr_function(LinkageKind.ARM_CONFIG).gradient(straight), 0, atol=1e-12)
    assert np.allclose(lr_function(LinkageKind.ARM_LINKAGE, straight.rho).gradient(straight), 0, atol=1e-12)
    conf = arm_extract(regular(6))
    assert np.allclose(lr_function(LinkageKind.CYCLE_CONFIG).gradient(conf), 0, atol=1e-8)
    bigger = arm_extract(regular(6, perimeter=1.5))
    assert np.abs(lr_function(LinkageKind.CYCLE_CONFIG).gradient(bigger)).max() > 1e-3


def test_projections_keep_lengths():
    arm = sampling.random_arm(np.random.default_rng(5), 6)
    assert np.all(project_straight(arm).theta == 0)
    cyc = sampling.random_cycle_linkage(np.random.default_rng(6), 6)
    tau = project_cocircular(cyc)
    assert isinstance(tau, CycleChart) and np.array_equal(tau.lengths, cyc.lengths)
    assert geom.circumcircle_residual(embed(tau)) < 1e-9
    assert geom.signed_area(embed(tau)) >= geom.signed_area(embed(cyc))
    conf = arm_extract(embed(cyc))
    tau2 = project_cocircular(conf)
    assert np.allclose(embed(tau2), embed(tau), atol=1e-9)


@given(seeds)
def test_straightening_never_raises_strain(seed):
    rng = np.random.default_rng(seed)
    arm = sampling.random_arm(rng, int(rng.integers(3, 9)), min_clearance=0.0)
    fld = lr_function(LinkageKind.ARM_LINKAGE, arm.rho)
    assert fld.value(arm) >= fld.value(project_straight(arm)) - 1e-12
