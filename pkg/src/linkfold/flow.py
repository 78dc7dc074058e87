"""Integrators for negative-gradient, constraint-projected and bump-cutoff flows.

All three share one guarded RK4 stepper: a trial step is rejected (and the
step halved) when it leaves the moduli space, fails to lower ``f`` by a fair
share of the first-order prediction, or cannot be pulled back onto the
closure constraint.  After ten clean steps the step is
doubled again, never beyond ``FlowOptions.step``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .chart import CONSTRAINT_TOL, LinkageKind, embed
from .energy import BumpParams, ScalarField, bump_eta
from .errors import InvalidInput, LinkfoldError, SingularConstraint, Stalled

__all__ = [
    "FlowOptions",
    "Trajectory",
    "gradient_flow",
    "projected_flow",
    "bump_flow",
    "bump_flow_path",
    "ExpansiveReport",
    "expansive_monitor",
]

logger = logging.getLogger("linkfold")

MIN_STEP = 1e-12
# bump flows are run forward and backward, so they get a local error guard by default
BUMP_LOCAL_TOL = 1e-11
SUFFICIENT_DECREASE = 0.1
CLEAN_STEPS_BEFORE_GROWTH = 10
NEWTON_ITERS = 5


@dataclass(frozen=True)
class FlowOptions:
    step: float = 0.5
    grad_tol: float = 1e-6
    t_max: float = 1e4
    constraint_tol: float = CONSTRAINT_TOL
    frame_stride: int = 1
    max_steps: int = 1_000_000
    max_displacement: float = 0.1
    local_tol: float | None = None

    def __post_init__(self):
        for name in ("step", "grad_tol", "t_max", "constraint_tol", "max_displacement"):
            if not getattr(self, name) > 0:
                raise InvalidInput(f"FlowOptions.{name} must be positive")
        if self.local_tol is not None and not self.local_tol > 0:
            raise InvalidInput("FlowOptions.local_tol must be positive or None")
        if int(self.frame_stride) < 1 or int(self.max_steps) < 1:
            raise InvalidInput("frame_stride and max_steps must be >= 1")


@dataclass(frozen=True)
class Trajectory:
    kind: LinkageKind
    times: np.ndarray
    frames: list
    f_values: np.ndarray
    termination: str
    grad_norm: float = math.nan
    steps: int = 0
    rejected: int = 0
    vectors: list = field(default_factory=list, repr=False)

    @property
    def final(self):
        return self.frames[-1]

    def __len__(self):
        return len(self.frames)


class _Stepper:
    """Guarded RK4 on ``dx/dt = direction(x)`` with optional constraint restoration."""

    def __init__(self, fld: ScalarField, opts: FlowOptions, *, projected: bool, scale=None, sign=1.0,
                 monotone=True):
        self.fld = fld
        self.opts = opts
        self.projected = projected
        self.scale = scale  # optional x -> multiplier (bump cutoff)
        self.sign = sign
        self.monotone = monotone
        if projected:
            if fld.constraint is None:
                raise InvalidInput(f"{fld.kind.value} has no closure constraint to project onto")
            self.u_tol = opts.constraint_tol * float(fld.lengths[-1])

    def evaluate(self, x):
        """Value, gradient and flow direction at ``x``."""
        f, g = self.fld.value_and_gradient(x)
        d = -g
        if self.projected:
            _, a = self.fld.constraint(x)
            aa = float(a @ a)
            if aa <= 1e-20:
                raise SingularConstraint("closure gradient vanished")
            d = d + (float(g @ a) / aa) * a
        if self.scale is not None:
            d = d * self.scale(f)
        return f, g, self.sign * d

    def restore(self, x):
        if not self.projected:
            return x
        for _ in range(NEWTON_ITERS + 1):
            u, a = self.fld.constraint(x)
            if abs(u) < 0.01 * self.u_tol:
                return x
            aa = float(a @ a)
            if aa <= 1e-20:
                return None
            x = x - (u / aa) * a
        u, _ = self.fld.constraint(x)
        return x if abs(u) < self.u_tol else None

    def rk4(self, x, d, h):
        k2 = self.evaluate(x + 0.5 * h * d)[2]
        k3 = self.evaluate(x + 0.5 * h * k2)[2]
        k4 = self.evaluate(x + h * k3)[2]
        return x + (h / 6.0) * (d + 2.0 * k2 + 2.0 * k3 + k4)

    def trial(self, x, f, d, h):
        """One RK4 step; returns (x_new, f_new, g_new, d_new) or None when rejected.

        With ``local_tol`` set, the step is compared against two half steps
        and rejected when they disagree by more than ``15 * local_tol``.
        """
        tol = self.opts.local_tol
        try:
            x_new = self.rk4(x, d, h)
            if tol is not None:
                mid = self.rk4(x, d, 0.5 * h)
                fine = self.rk4(mid, self.evaluate(mid)[2], 0.5 * h)
                if float(np.max(np.abs(fine - x_new))) > 15.0 * tol:
                    return None
                x_new = fine + (fine - x_new) / 15.0  # Richardson extrapolation
            x_new = self.restore(x_new)
            if x_new is None:
                return None
            x_new = self.fld.wrap(x_new)
            if not self.fld.admissible(x_new):
                return None
            f_new, g_new, d_new = self.evaluate(x_new)
        except (LinkfoldError, FloatingPointError):
            return None
        if not np.all(np.isfinite(d_new)) or not math.isfinite(f_new):
            return None
        if self.monotone:
            if f_new > f + 1e-12 * abs(f) + 1e-15:
                return None
            # a step that barely lowers f sits at the RK4 stability limit of a
            # stiff mode, which then never decays; demand a fraction of the
            # first-order decrease h |d|^2 whenever it is above round-off
            expected = h * float(d @ d)
            if expected > 1e-11 * (abs(f) + 1.0) and f - f_new < SUFFICIENT_DECREASE * expected:
                return None
        return x_new, f_new, g_new, d_new


def _prepare(fld: ScalarField, start):
    x = fld.wrap(fld.to_vector(start))
    if not fld.admissible(x):
        raise InvalidInput("start state is not a valid point of the moduli space")
    return x


def _integrate(stepper: _Stepper, x, fld, opts: FlowOptions, stop_norm):
    f, g, d = stepper.evaluate(x)
    times, vecs, fvals = [0.0], [x], [f]
    t, h, clean, steps, rejected = 0.0, opts.step, 0, 0, 0
    termination = "t_max_reached"
    norm = stop_norm(g, d)
    while True:
        if norm < opts.grad_tol:
            termination = "converged"
            break
        if t >= opts.t_max:
            break
        if steps >= opts.max_steps:
            termination = "guard_tripped"
            break
        dmax = float(np.max(np.abs(d)))
        h_try = min(h, opts.t_max - t)
        if dmax * h_try > opts.max_displacement:
            h_try = opts.max_displacement / dmax
        result = stepper.trial(x, f, d, h_try)
        if result is None:
            rejected += 1
            h = 0.5 * min(h, h_try)
            clean = 0
            if h < MIN_STEP:
                traj = _trajectory(fld, times, vecs, fvals, "guard_tripped", norm, steps, rejected)
                raise _attach(Stalled(f"step size underflow at t={t:.6g}"), traj)
            continue
        x, f, g, d = result
        t += h_try
        steps += 1
        norm = stop_norm(g, d)
        if steps % opts.frame_stride == 0:
            times.append(t)
            vecs.append(x)
            fvals.append(f)
        clean += 1
        if clean >= CLEAN_STEPS_BEFORE_GROWTH:
            h = min(2.0 * h, opts.step)
            clean = 0
    if times[-1] != t:
        times.append(t)
        vecs.append(x)
        fvals.append(f)
    logger.info("%s flow: %s after %d steps (%d rejected), t=%.4g, |grad|=%.3e",
                fld.kind.value, termination, steps, rejected, t, norm)
    return _trajectory(fld, times, vecs, fvals, termination, norm, steps, rejected)


def _attach(exc, traj):
    exc.trajectory = traj
    return exc


def _trajectory(fld, times, vecs, fvals, termination, norm, steps, rejected):
    return Trajectory(
        kind=fld.kind,
        times=np.asarray(times),
        frames=[fld.to_state(v) for v in vecs],
        f_values=np.asarray(fvals),
        termination=termination,
        grad_norm=float(norm),
        steps=steps,
        rejected=rejected,
        vectors=list(vecs),
    )


def gradient_flow(fld: ScalarField, start, opts: FlowOptions | None = None) -> Trajectory:
    """Integrate ``dx/dt = -grad f`` until ``|grad f|_inf < grad_tol`` or ``t_max``."""
    opts = opts or FlowOptions()
    x = _prepare(fld, start)
    stepper = _Stepper(fld, opts, projected=False)
    return _integrate(stepper, x, fld, opts, lambda g, d: float(np.max(np.abs(g))) if len(g) else 0.0)


def projected_flow(fld: ScalarField, start, opts: FlowOptions | None = None) -> Trajectory:
    """Negative gradient projected onto the tangent space of ``u = 0``.

    After every RK4 step a Newton iteration along ``grad u`` pulls the state
    back onto the constraint; a step whose residual stays above
    ``constraint_tol * l_m`` is rejected.
    """
    opts = opts or FlowOptions()
    x = _prepare(fld, start)
    stepper = _Stepper(fld, opts, projected=True)
    u, a = fld.constraint(x)
    if abs(u) >= stepper.u_tol:
        raise InvalidInput(f"start is off the closure constraint (|u| = {abs(u):.3e})")
    if float(np.linalg.norm(a)) <= 1e-10:
        raise SingularConstraint("closure gradient vanishes at the start state")
    return _integrate(stepper, x, fld, opts, lambda g, d: float(np.max(np.abs(d))) if len(d) else 0.0)


def bump_flow_path(fld: ScalarField, params: BumpParams, start, s: float,
                   opts: FlowOptions | None = None) -> list:
    """Chart vectors visited while integrating the cutoff field for signed time ``s``.

    The field is ``-eta(f) grad f`` (projected for cycle linkages); negative
    ``s`` integrates its negation.  There is no monotonicity guard here since
    the backward flow raises ``f`` by design; the local error guard is always
    on (``BUMP_LOCAL_TOL`` unless ``opts.local_tol`` is set).
    """
    opts = opts or FlowOptions()
    if opts.local_tol is None:
        opts = replace(opts, local_tol=BUMP_LOCAL_TOL)
    x = _prepare(fld, start)
    f0 = fld.value(x)
    if f0 >= params.b or s == 0:
        return [x]
    projected = fld.kind is LinkageKind.CYCLE_LINKAGE
    stepper = _Stepper(
        fld, opts, projected=projected, scale=lambda f: bump_eta(params, f)[0],
        sign=1.0 if s > 0 else -1.0, monotone=False,
    )
    total = abs(s)
    f, _, d = stepper.evaluate(x)
    path = [x]
    t, h, clean = 0.0, opts.step, 0
    while total - t > 1e-14 * max(1.0, total):
        dmax = float(np.max(np.abs(d))) if len(d) else 0.0
        if dmax == 0.0:
            break
        h_try = min(h, total - t)
        if dmax * h_try > opts.max_displacement:
            h_try = opts.max_displacement / dmax
        result = stepper.trial(x, f, d, h_try)
        if result is None:
            h = 0.5 * min(h, h_try)
            clean = 0
            if h < MIN_STEP:
                raise Stalled(f"bump flow step underflow at s={t:.6g}")
            continue
        x, f, _, d = result
        t += h_try
        path.append(x)
        clean += 1
        if clean >= CLEAN_STEPS_BEFORE_GROWTH:
            h = min(2.0 * h, opts.step)
            clean = 0
    return path


def bump_flow(fld: ScalarField, params: BumpParams, start, s: float, opts: FlowOptions | None = None):
    """State reached by the complete cutoff flow after signed time ``s``."""
    return fld.to_state(bump_flow_path(fld, params, start, s, opts)[-1])


@dataclass(frozen=True)
class ExpansiveReport:
    expansive: bool
    non_decreasing: bool
    strictly_increased: bool
    min_change: float
    max_change: float


def expansive_monitor(frame_a, frame_b, tol: float = 1e-12) -> ExpansiveReport:
    """Compare all pairwise vertex distances between two frames.

    The motion is reported expansive when no distance shrinks by more than
    ``tol`` (relative to the frame size) and at least one grows by more
    than ``tol``.
    """
    pa, pb = embed(frame_a), embed(frame_b)
    if pa.shape != pb.shape:
        raise InvalidInput("frames have different numbers of vertices")
    iu = np.triu_indices(len(pa), 1)
    da = np.hypot(*(pa[:, None, :] - pa[None, :, :])[iu].T)
    db = np.hypot(*(pb[:, None, :] - pb[None, :, :])[iu].T)
    change = db - da
    eps = tol * max(1.0, float(da.max()) if len(da) else 1.0)
    non_decreasing = bool(np.all(change >= -eps))
    strict = bool(np.any(change > eps))
    return ExpansiveReport(
        expansive=non_decreasing and strict,
        non_decreasing=non_decreasing,
        strictly_increased=strict,
        min_change=float(change.min()) if len(change) else 0.0,
        max_change=float(change.max()) if len(change) else 0.0,
    )
