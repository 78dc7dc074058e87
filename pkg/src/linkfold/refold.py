"""Renormalization refolding between two states of the same moduli space.

Both endpoints are pushed along the complete (bump-cutoff) flow in increments
of ``delta`` until a chart geodesic joins them without leaving the moduli
space.  The geodesic is then discretized and every sample is carried back by
the reversed flow, once per increment.  The reversed flow stretches the
neighbourhoods of the endpoints exponentially, so the returned frames walk
the stored forward flows instead and the pulled-back curve is kept beside
them for checking.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .chart import (
    ArmChart,
    CycleChart,
    LinkageKind,
    chart_distance,
    chart_vector,
    validate,
    wrap_angles,
)
from .energy import BumpParams, CycleLinkageField, lr_function
from .errors import InvalidInput, LinkfoldError, NoConnectionFound, Stalled
from .flow import FlowOptions, bump_flow_path, projected_flow

__all__ = [
    "RefoldOptions",
    "Motion",
    "infer_kind",
    "chart_geodesic",
    "refold",
    "pullback_error",
]

logger = logging.getLogger("linkfold")

GEODESIC_TOL = 1e-8
LENGTH_MATCH_TOL = 1e-10


@dataclass(frozen=True)
class RefoldOptions:
    delta: float = 0.25
    samples: int = 64
    max_iter: int = 400
    flow_opts: FlowOptions = field(default_factory=FlowOptions)
    pull_back: bool = True

    def __post_init__(self):
        if not self.delta > 0:
            raise InvalidInput("RefoldOptions.delta must be positive")
        if int(self.samples) < 2:
            raise InvalidInput("RefoldOptions.samples must be at least 2")
        if int(self.max_iter) < 0:
            raise InvalidInput("RefoldOptions.max_iter must be non-negative")


@dataclass(frozen=True)
class Motion:
    """A discretized motion from ``p0`` to ``p1``.

    ``frames`` runs along the stored forward flow of ``p0``, across the
    connecting curve ``gamma0`` and back along the flow of ``p1``, so it
    starts and ends exactly at the inputs and every frame is an accepted
    integrator state.  ``gamma`` is ``gamma0`` carried back by ``n0``
    reversed increments (empty when the pull-back is switched off or
    stalled, see ``pullback_failure``); ``endpoint_gap`` is how far its ends
    landed from the inputs.
    """

    kind: LinkageKind
    frames: list
    n0: int
    valid: list
    gamma0: list = field(repr=False)
    gamma: list = field(repr=False)
    gamma_valid: list = field(default_factory=list, repr=False)
    params: BumpParams | None = None
    delta: float = 0.25
    endpoint_gap: float = 0.0
    pullback_failure: str | None = None

    @property
    def all_valid(self) -> bool:
        return all(self.valid)

    def __len__(self):
        return len(self.frames)


def infer_kind(state) -> LinkageKind:
    """Default kind for a bare chart state.

    Cycle charts are cycle linkages; arm charts are taken as arm linkages.
    Cycle configurations share the arm chart and must be named explicitly.
    """
    if isinstance(state, CycleChart):
        return LinkageKind.CYCLE_LINKAGE
    if isinstance(state, ArmChart):
        return LinkageKind.ARM_LINKAGE
    raise InvalidInput(f"not a chart state: {state!r}")


def _lengths(kind, state):
    if kind is LinkageKind.CYCLE_LINKAGE:
        return state.lengths
    if kind is LinkageKind.ARM_LINKAGE:
        return state.rho
    return None


def _check_pair(kind, p0, p1):
    for p in (p0, p1):
        report = validate(kind, p)
        if not report:
            raise InvalidInput(f"endpoint is not valid for {kind.value}: {', '.join(report.reasons)}")
    if chart_vector(p0, kind).shape != chart_vector(p1, kind).shape:
        raise InvalidInput("endpoints have different dimensions")
    if kind.fixed_lengths:
        l0, l1 = _lengths(kind, p0), _lengths(kind, p1)
        if np.max(np.abs(l0 - l1)) > LENGTH_MATCH_TOL * max(1.0, float(np.max(l0))):
            raise InvalidInput("linkage endpoints must share their length vector")


def _angle_start(kind, x) -> int:
    if kind in (LinkageKind.ARM_LINKAGE, LinkageKind.CYCLE_LINKAGE):
        return 0
    return (len(x) + 1) // 2


def _flat_difference(kind, x0, x1):
    diff = x1 - x0
    k = _angle_start(kind, x0)
    diff[k:] = wrap_angles(diff[k:])
    return diff


class _TargetField(CycleLinkageField):
    """``H = |theta - target|^2`` on a cycle linkage, for the connecting ODE."""

    def __init__(self, lengths, target):
        super().__init__(lengths)
        self.target = np.asarray(target, dtype=float)

    def value_and_gradient(self, x):
        x = self.to_vector(x)
        diff = wrap_angles(x - self.target)
        return float(diff @ diff), 2.0 * diff


def _restore(fld, x, tol):
    for _ in range(8):
        u, a = fld.constraint(x)
        if abs(u) < tol:
            return x
        aa = float(a @ a)
        if aa <= 1e-20:
            return None
        x = wrap_angles(x - (u / aa) * a)
    u, _ = fld.constraint(x)
    return x if abs(u) < tol else None


def _resample(points, samples):
    """Pick ``samples`` points along a polyline in the chart, evenly by arc length."""
    points = np.asarray(points)
    if len(points) == 1:
        return np.repeat(points, samples, axis=0)
    seg = np.linalg.norm(wrap_angles(np.diff(points, axis=0)), axis=1)
    arc = np.concatenate(([0.0], np.cumsum(seg)))
    if arc[-1] == 0:
        return np.repeat(points[:1], samples, axis=0)
    targets = np.linspace(0.0, arc[-1], samples)
    idx = np.clip(np.searchsorted(arc, targets, side="right") - 1, 0, len(seg) - 1)
    frac = np.where(seg[idx] > 0, (targets - arc[idx]) / np.where(seg[idx] > 0, seg[idx], 1.0), 0.0)
    step = wrap_angles(points[idx + 1] - points[idx])
    return wrap_angles(points[idx] + frac[:, None] * step)


def chart_geodesic(kind, x0, y0, samples: int = 64, flow_opts: FlowOptions | None = None):
    """Chart states joining ``x0`` to ``y0``, or ``None`` if the curve leaves the moduli space.

    Free charts use straight segments (each angle along its shorter arc).  A
    cycle linkage follows the gradient of ``|theta - y0|^2`` projected onto
    the closure constraint.
    """
    kind = LinkageKind(kind)
    if int(samples) < 2:
        raise InvalidInput("samples must be at least 2")
    a, b = chart_vector(x0, kind), chart_vector(y0, kind)
    if a.shape != b.shape:
        raise InvalidInput("endpoints have different dimensions")
    lengths = _lengths(kind, x0)
    if kind.fixed_lengths and np.max(np.abs(lengths - _lengths(kind, y0))) > LENGTH_MATCH_TOL * max(
        1.0, float(np.max(lengths))
    ):
        raise InvalidInput("linkage endpoints must share their length vector")

    if kind is LinkageKind.CYCLE_LINKAGE:
        vectors = _cycle_geodesic(lengths, a, b, int(samples), flow_opts)
        if vectors is None:
            return None
    else:
        ts = np.linspace(0.0, 1.0, int(samples))
        diff = _flat_difference(kind, a, b)
        vectors = [a + t * diff for t in ts]
        vectors[-1] = b.copy()

    states = []
    fld = lr_function(kind, lengths) if kind.fixed_lengths else lr_function(kind)
    for v in vectors:
        try:
            state = fld.to_state(fld.wrap(v))
        except LinkfoldError:
            return None
        if not validate(kind, state):
            return None
        states.append(state)
    states[0], states[-1] = x0, y0
    return states


def _cycle_geodesic(lengths, a, b, samples, flow_opts):
    if np.max(np.abs(wrap_angles(a - b))) == 0:
        return [a.copy() for _ in range(samples)]
    fld = _TargetField(lengths, b)
    base = flow_opts or FlowOptions()
    opts = FlowOptions(
        step=min(base.step, 0.25),
        grad_tol=0.1 * GEODESIC_TOL,
        t_max=50.0,
        constraint_tol=base.constraint_tol,
        max_displacement=base.max_displacement,
    )
    try:
        traj = projected_flow(fld, a, opts)
    except LinkfoldError:
        return None
    path = traj.vectors
    if float(np.linalg.norm(wrap_angles(path[-1] - b))) > GEODESIC_TOL:
        return None
    curve = _resample(np.vstack(path + [b]), samples)
    tol = 0.1 * opts.constraint_tol * float(lengths[-1])
    out = []
    for v in curve:
        r = _restore(fld, v, tol)
        if r is None:
            return None
        out.append(r)
    out[0], out[-1] = a.copy(), b.copy()
    return out


def _field(kind, p0):
    kind = LinkageKind(kind)
    return lr_function(kind, _lengths(kind, p0)) if kind.fixed_lengths else lr_function(kind)


def refold(p0, p1, opts: RefoldOptions | None = None, kind=None) -> Motion:
    """Motion from ``p0`` to ``p1`` through the renormalized flow.

    A direct chart geodesic is accepted as is.  After one or more flow
    increments the connecting curve must in addition stay in the sublevel set
    ``f < a`` of the cutoff, where the pull-back is the plain reversed flow.

    ``kind`` defaults to :func:`infer_kind`; pass it explicitly for arm or
    cycle configurations.
    """
    opts = opts or RefoldOptions()
    kind = LinkageKind(kind) if kind is not None else infer_kind(p0)
    _check_pair(kind, p0, p1)
    fld = _field(kind, p0)
    params = BumpParams.for_endpoints(fld.value(p0), fld.value(p1))

    x, y = fld.to_vector(p0), fld.to_vector(p1)
    path_x, path_y = [x], [y]
    n0 = 0
    gamma0 = chart_geodesic(kind, p0, p1, opts.samples, opts.flow_opts)
    while gamma0 is None:
        if n0 >= opts.max_iter:
            raise NoConnectionFound(
                f"no connecting geodesic after {n0} flow increments of {opts.delta}", reached=n0
            )
        path_x += bump_flow_path(fld, params, path_x[-1], opts.delta, opts.flow_opts)[1:]
        path_y += bump_flow_path(fld, params, path_y[-1], opts.delta, opts.flow_opts)[1:]
        n0 += 1
        gamma0 = chart_geodesic(
            kind, fld.to_state(path_x[-1]), fld.to_state(path_y[-1]), opts.samples, opts.flow_opts
        )
        if gamma0 is not None and max(fld.value(g) for g in gamma0) >= params.a:
            # outside the sublevel set the cutoff flow is no longer the plain
            # flow and the pull-back squeezes samples against f = b
            gamma0 = None
    logger.info("refold: connected after n0=%d increments", n0)

    gamma, failure = [], None
    if opts.pull_back:
        try:
            for j, state in enumerate(gamma0):
                v = fld.to_vector(state)
                for i in range(n0):
                    try:
                        v = bump_flow_path(fld, params, v, -opts.delta, opts.flow_opts)[-1]
                    except Stalled as exc:
                        raise Stalled(f"pull-back of sample {j} stalled in increment {i + 1} of {n0}: {exc}") from exc
                gamma.append(fld.to_state(v))
        except Stalled as exc:
            # the frames do not depend on the pull-back, so the motion stands
            failure = str(exc)
            gamma = []
            logger.warning("refold: %s", failure)
    gap = max(chart_distance(gamma[0], p0), chart_distance(gamma[-1], p1)) if gamma else 0.0

    frames = (
        [p0]
        + [fld.to_state(v) for v in path_x[1:-1]]
        + list(gamma0)
        + [fld.to_state(v) for v in path_y[-2:0:-1]]
        + [p1]
    ) if n0 else list(gamma0)
    return Motion(
        kind=kind,
        frames=frames,
        n0=n0,
        valid=[bool(validate(kind, f)) for f in frames],
        gamma0=gamma0,
        gamma=gamma,
        gamma_valid=[bool(validate(kind, f)) for f in gamma],
        params=params,
        delta=opts.delta,
        endpoint_gap=gap,
        pullback_failure=failure,
    )


def pullback_error(motion: Motion, flow_opts: FlowOptions | None = None) -> float:
    """Largest chart distance between the forward-flowed pull-back and the connecting curve.

    Each sample of ``motion.gamma`` is pushed forward by ``n0`` increments
    and compared with the matching sample of ``motion.gamma0``.
    """
    if motion.pullback_failure:
        raise Stalled(motion.pullback_failure)
    if not motion.gamma:
        raise InvalidInput("motion was computed without the pull-back")
    if motion.n0 == 0:
        return max(chart_distance(a, b) for a, b in zip(motion.gamma, motion.gamma0))
    fld = _field(motion.kind, motion.frames[0])
    worst = 0.0
    for back, target in zip(motion.gamma, motion.gamma0):
        v = fld.to_vector(back)
        for _ in range(motion.n0):
            v = bump_flow_path(fld, motion.params, v, motion.delta, flow_opts)[-1]
        worst = max(worst, chart_distance(fld.to_state(v), target))
    return worst

