import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linkfold import geom, sampling
from linkfold.chart import ArmChart, CycleChart, LinkageKind, arm_extract, chart_distance, cycle_constraint, embed
from linkfold.energy import BumpParams, lr_function
from linkfold.errors import InvalidInput
from linkfold.flow import (
    FlowOptions,
    bump_flow,
    bump_flow_path,
    expansive_monitor,
    gradient_flow,
    projected_flow,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def arm_field(arm):
    return lr_function(LinkageKind.ARM_LINKAGE, arm.rho)


def test_options_validation():
    for bad in (dict(step=0), dict(grad_tol=-1), dict(t_max=0), dict(frame_stride=0), dict(local_tol=0)):
        with pytest.raises(InvalidInput):
            FlowOptions(**bad)


@settings(max_examples=10)
@given(seeds)
def test_arm_straightens(seed):
    arm = sampling.random_arm(np.random.default_rng(seed), 6)
    traj = gradient_flow(arm_field(arm), arm, FlowOptions(step=2.0))
    assert traj.termination == "converged"
    assert np.max(np.abs(traj.final.theta)) < 1e-3
    assert np.all(np.diff(traj.f_values) <= 1e-9 * np.maximum(1, np.abs(traj.f_values[:-1])))
    assert np.all(np.diff(traj.times) > 0)
    assert all(geom.is_simple(embed(s), closed=False) for s in traj.frames)
    assert np.array_equal(traj.final.rho, arm.rho)


def test_frame_stride_keeps_final_state():
    arm = sampling.random_arm(np.random.default_rng(2), 6)
    full = gradient_flow(arm_field(arm), arm, FlowOptions(step=2.0))
    sparse = gradient_flow(arm_field(arm), arm, FlowOptions(step=2.0, frame_stride=7))
    assert len(sparse) < len(full)
    assert sparse.times[-1] == full.times[-1]
    assert chart_distance(sparse.final, full.final) == 0


def test_t_max_reported():
    arm = sampling.random_arm(np.random.default_rng(4), 7)
    traj = gradient_flow(arm_field(arm), arm, FlowOptions(t_max=0.3))
    assert traj.termination == "t_max_reached"
    assert traj.times[-1] == pytest.approx(0.3)


def test_invalid_start_rejected():
    crossing = arm_extract([[0, 0], [2, 0], [1, 1], [1, -1]])
    with pytest.raises(InvalidInput):
        gradient_flow(arm_field(crossing), crossing)


def test_projected_flow_keeps_closure():
    cyc = sampling.random_cycle_linkage(np.random.default_rng(8), 7)
    fld = lr_function(LinkageKind.CYCLE_LINKAGE, cyc.lengths)
    traj = projected_flow(fld, cyc, FlowOptions(step=8.0, grad_tol=1e-8))
    assert traj.termination == "converged"
    assert max(abs(cycle_constraint(s.theta, s.lengths)[0]) for s in traj.frames) < 1e-8 * cyc.lengths[-1]
    assert geom.circumcircle_residual(embed(traj.final)) < 1e-4
    assert np.all(geom.turning_angles(embed(traj.final)) > 0)


def test_projected_flow_rejects_open_start():
    fld = lr_function(LinkageKind.CYCLE_LINKAGE, [1, 1, 1, 1])
    with pytest.raises(InvalidInput):
        projected_flow(fld, CycleChart([1, 1, 1, 1], [math.pi / 2, math.pi - 0.2]))


def test_config_flow_reaches_regular_polygon():
    conf = sampling.random_cycle_config(np.random.default_rng(11), 5)
    traj = gradient_flow(lr_function(LinkageKind.CYCLE_CONFIG), conf, FlowOptions(grad_tol=1e-4))
    pts = embed(traj.final)
    sides = np.hypot(*(np.roll(pts, -1, 0) - pts).T)
    assert sides.sum() == pytest.approx(1.0, abs=1e-3)
    assert np.allclose(sides, 0.2, atol=1e-3)


@settings(max_examples=8)
@given(seeds, st.sampled_from([0.1, 0.5, 1.0]))
def test_arm_bump_round_trip(seed, s):
    arm = sampling.random_arm(np.random.default_rng(seed), 5)
    fld = arm_field(arm)
    params = BumpParams.for_endpoints(fld.value(arm))
    back = bump_flow(fld, params, bump_flow(fld, params, arm, s), -s)
    assert chart_distance(arm, back) < 1e-5


def test_bump_flow_fixes_points_above_b():
    arm = sampling.random_arm(np.random.default_rng(0), 6)
    fld = arm_field(arm)
    f0 = fld.value(arm)
    params = BumpParams(f0 - 2, f0 - 1)
    assert bump_flow_path(fld, params, arm, 3.0) == [pytest.approx(arm.theta)]
    assert np.array_equal(bump_flow(fld, params, arm, -3.0).theta, arm.theta)


def test_bump_flow_moves_and_lowers_f():
    arm = sampling.random_arm(np.random.default_rng(1), 6)
    fld = arm_field(arm)
    params = BumpParams.for_endpoints(fld.value(arm))
    ahead = bump_flow(fld, params, arm, 0.5)
    assert fld.value(ahead) < fld.value(arm)
    assert fld.value(bump_flow(fld, params, arm, -0.5)) > fld.value(arm)


def test_expansive_monitor():
    pts = sampling.random_simple_polygon(np.random.default_rng(3), 6)
    a, b = arm_extract(pts), arm_extract(1.1 * pts)
    assert expansive_monitor(a, b).expansive
    assert not expansive_monitor(b, a).expansive
    same = expansive_monitor(a, a)
    assert same.non_decreasing and not same.strictly_increased
    with pytest.raises(InvalidInput):
        expansive_monitor(a, arm_extract(pts[:5]))


def test_straight_arm_is_a_fixed_point():
    arm = ArmChart(np.ones(5), np.zeros(4))
    traj = gradient_flow(arm_field(arm), arm)
    assert traj.termination == "converged" and traj.steps == 0 and len(traj) == 1
