"""Chart coordinates for arm and cycle moduli spaces.

An arm with vertices ``v_0 .. v_{m-1}`` is normalized so that ``v_0`` is the
origin and ``v_1`` lies on the positive x-axis.  Its chart is the edge-length
vector ``rho`` (``m - 1`` entries) together with the absolute directions
``theta`` of edges ``1 .. m-2`` (edge 0 always has direction 0).

A cycle linkage keeps all ``m`` side lengths fixed; its free coordinates
are the same ``m - 2`` directions, subject to the closure constraint
``u(theta) = |v_{m-1} - v_0| - l_{m-1} = 0``.  A cycle configuration is an
:class:`ArmChart` whose closing side is derived from the embedding.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import geom
from .errors import InvalidInput, SingularConstraint

__all__ = [
    "LinkageKind",
    "ArmChart",
    "CycleChart",
    "wrap_angles",
    "arm_embed",
    "arm_extract",
    "cycle_embed",
    "cycle_extract",
    "embed",
    "cycle_constraint",
    "ValidityReport",
    "validate",
    "chart_vector",
    "state_from_vector",
    "chart_distance",
    "CONSTRAINT_TOL",
]

CONSTRAINT_TOL = 1e-9


class LinkageKind(str, enum.Enum):
    ARM_LINKAGE = "arm_linkage"
    ARM_CONFIG = "arm_config"
    CYCLE_LINKAGE = "cycle_linkage"
    CYCLE_CONFIG = "cycle_config"

    @property
    def is_cycle(self) -> bool:
        return self in (LinkageKind.CYCLE_LINKAGE, LinkageKind.CYCLE_CONFIG)

    @property
    def fixed_lengths(self) -> bool:
        return self in (LinkageKind.ARM_LINKAGE, LinkageKind.CYCLE_LINKAGE)


def wrap_angles(theta) -> np.ndarray:
    """Wrap angles into (-pi, pi]."""
    theta = np.asarray(theta, dtype=float)
    wrapped = np.mod(theta + math.pi, 2.0 * math.pi) - math.pi
    return np.where(wrapped == -math.pi, math.pi, wrapped)


@dataclass(frozen=True, eq=False)
class ArmChart:
    rho: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float).reshape(-1)
        theta = wrap_angles(np.asarray(self.theta, dtype=float).reshape(-1))
        if len(rho) < 1 or len(theta) != max(len(rho) - 1, 0):
            raise InvalidInput(f"ArmChart needs len(theta) == len(rho) - 1, got {len(rho)}, {len(theta)}")
        if np.any(~np.isfinite(rho)) or np.any(rho <= 0):
            raise InvalidInput("ArmChart lengths must be positive and finite")
        if np.any(~np.isfinite(theta)):
            raise InvalidInput("ArmChart angles must be finite")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "theta", theta)

    @property
    def m(self) -> int:
        return len(self.rho) + 1

    def __repr__(self):
        return f"ArmChart(rho={self.rho.tolist()}, theta={self.theta.tolist()})"


@dataclass(frozen=True, eq=False)
class CycleChart:
    lengths: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        lengths = np.asarray(self.lengths, dtype=float).reshape(-1)
        theta = wrap_angles(np.asarray(self.theta, dtype=float).reshape(-1))
        if len(lengths) < 3 or len(theta) != len(lengths) - 2:
            raise InvalidInput("CycleChart needs m >= 3 lengths and m - 2 angles")
        if np.any(~np.isfinite(lengths)) or np.any(lengths <= 0):
            raise InvalidInput("CycleChart lengths must be positive and finite")
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "theta", theta)

    @property
    def m(self) -> int:
        return len(self.lengths)

    def __repr__(self):
        return f"CycleChart(lengths={self.lengths.tolist()}, theta={self.theta.tolist()})"


def _embed(rho: np.ndarray, theta: np.ndarray) -> np.ndarray:
    angles = np.concatenate(([0.0], theta))
    steps = rho[:, None] * np.column_stack((np.cos(angles), np.sin(angles)))
    out = np.zeros((len(rho) + 1, 2))
    np.cumsum(steps, axis=0, out=out[1:])
    return out


def arm_embed(chart: ArmChart) -> np.ndarray:
    return _embed(chart.rho, chart.theta)


def arm_extract(vertices) -> ArmChart:
    """Chart of a polyline, quotienting out orientation-preserving isometries."""
    pts = geom.as_points(vertices)
    if len(pts) < 2:
        raise InvalidInput("an arm needs at least 2 vertices")
    d = np.diff(pts, axis=0)
    rho = np.hypot(d[:, 0], d[:, 1])
    if np.any(rho == 0):
        raise InvalidInput("repeated consecutive points")
    directions = np.arctan2(d[:, 1], d[:, 0])
    return ArmChart(rho, wrap_angles(directions[1:] - directions[0]))


def cycle_embed(chart: CycleChart) -> np.ndarray:
    """Vertices of a cycle state; the closing side is implied by the vertex order."""
    return _embed(chart.lengths[:-1], chart.theta)


def cycle_extract(vertices) -> CycleChart:
    pts = geom.as_points(vertices)
    if len(pts) < 3:
        raise InvalidInput("a cycle needs at least 3 vertices")
    arm = arm_extract(pts)
    closing = float(np.hypot(*(pts[-1] - pts[0])))
    if closing == 0:
        raise InvalidInput("repeated consecutive points")
    return CycleChart(np.append(arm.rho, closing), arm.theta)


def embed(state) -> np.ndarray:
    if isinstance(state, CycleChart):
        return cycle_embed(state)
    if isinstance(state, ArmChart):
        return arm_embed(state)
    raise InvalidInput(f"not a chart state: {state!r}")


def cycle_constraint(theta, lengths):
    """Closure residual ``u`` and its gradient with respect to ``theta``."""
    theta = np.asarray(theta, dtype=float)
    lengths = np.asarray(lengths, dtype=float)
    if len(lengths) < 3 or len(theta) != len(lengths) - 2:
        raise InvalidInput("cycle_constraint needs m lengths and m - 2 angles")
    mid = lengths[1:-1]
    c, s = np.cos(theta), np.sin(theta)
    x = lengths[0] + float(mid @ c)
    y = float(mid @ s)
    r = math.hypot(x, y)
    if r == 0.0:
        raise SingularConstraint("first and last vertex coincide; closure gradient undefined")
    grad = mid * (-x * s + y * c) / r
    return r - lengths[-1], grad


@dataclass
class ValidityReport:
    kind: LinkageKind
    simple: bool
    positive: bool | None = None
    constraint_residual: float | None = None
    c1: bool | None = None
    reasons: list = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.reasons

    def __bool__(self):
        return self.valid


def validate(kind, state, constraint_tol: float = CONSTRAINT_TOL) -> ValidityReport:
    """Report whether ``state`` is a point of the moduli space named by ``kind``."""
    kind = LinkageKind(kind)
    try:
        pts = embed(state)
    except InvalidInput as exc:
        return ValidityReport(kind, simple=False, reasons=[str(exc)])
    if not kind.is_cycle:
        if not isinstance(state, ArmChart):
            return ValidityReport(kind, simple=False, reasons=["arm kinds need an ArmChart"])
        simple = geom.is_simple(pts, closed=False)
        return ValidityReport(kind, simple=simple, reasons=[] if simple else ["not simple"])

    reasons = []
    if kind is LinkageKind.CYCLE_LINKAGE and not isinstance(state, CycleChart):
        return ValidityReport(kind, simple=False, reasons=["cycle_linkage needs a CycleChart"])
    if kind is LinkageKind.CYCLE_CONFIG and not isinstance(state, ArmChart):
        return ValidityReport(kind, simple=False, reasons=["cycle_config needs an ArmChart"])
    if len(pts) < 3:
        return ValidityReport(kind, simple=False, reasons=["a cycle needs at least 3 vertices"])
    simple = geom.is_simple(pts, closed=True)
    if not simple:
        reasons.append("not simple")
    area = geom.signed_area(pts)
    positive = area > 0
    if not positive:
        reasons.append("negative orientation")
    residual = None
    if isinstance(state, CycleChart):
        lengths = state.lengths
        residual = float(np.hypot(*(pts[-1] - pts[0])) - lengths[-1])
        if abs(residual) >= constraint_tol * lengths[-1]:
            reasons.append(f"closure residual {residual:.3e} exceeds tolerance")
    else:
        lengths = np.append(state.rho, np.hypot(*(pts[-1] - pts[0])))
    total = lengths.sum()
    c1 = bool(np.all(lengths < total - lengths))
    if not c1:
        reasons.append("infeasible lengths")
    return ValidityReport(kind, simple, positive, residual, c1, reasons)


# --------------------------------------------------------------------------
# flat vectors used by the integrators


def chart_vector(state, kind=None) -> np.ndarray:
    """Free coordinates of a state: ``theta`` for linkages, ``(rho, theta)`` for configurations."""
    if isinstance(state, CycleChart):
        return state.theta.copy()
    if isinstance(state, ArmChart):
        if kind is not None and LinkageKind(kind) is LinkageKind.ARM_LINKAGE:
            return state.theta.copy()
        return np.concatenate((state.rho, state.theta))
    raise InvalidInput(f"not a chart state: {state!r}")


def state_from_vector(kind, x, lengths=None):
    """Inverse of :func:`chart_vector`; ``lengths`` is required for linkage kinds."""
    kind = LinkageKind(kind)
    x = np.asarray(x, dtype=float)
    if kind is LinkageKind.CYCLE_LINKAGE:
        return CycleChart(lengths, x)
    if kind is LinkageKind.ARM_LINKAGE:
        return ArmChart(lengths, x)
    n_rho = (len(x) + 1) // 2
    return ArmChart(x[:n_rho], x[n_rho:])


def chart_distance(a, b) -> float:
    """Euclidean distance in the flat chart, taking angle differences mod 2*pi."""
    xa, xb = chart_vector(a), chart_vector(b)
    if xa.shape != xb.shape:
        raise InvalidInput("states have different dimensions")
    if isinstance(a, CycleChart):
        diff = wrap_angles(xb - xa)
    else:
        n_rho = len(a.rho)
        diff = np.concatenate((xb[:n_rho] - xa[:n_rho], wrap_angles(xb[n_rho:] - xa[n_rho:])))
    return float(np.linalg.norm(diff))
