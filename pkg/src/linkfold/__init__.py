"""Straighten, convexify and refold planar linkages by gradient flows.

Arms (open chains) and cycles (closed polygons) are handled in a chart of
edge lengths and absolute edge directions.  Each moduli space carries a
smooth function whose gradient flow removes self-contact and drives the
linkage to a canonical state: straight for arms, convex and cocircular
for cycles.  Two states with equal lengths are connected by pulling a
straight-line path back along a bumped version of the same flow.
"""
__version__ = "0.1.0"

from .chart import ArmChart, CycleChart, LinkageKind, embed, validate
from .energy import lr_function, project_cocircular, project_straight
from .errors import (
    ConvergenceFailure,
    DegenerateTriangle,
    InfeasibleLengths,
    InvalidInput,
    InvalidParams,
    LinkfoldError,
    NearContact,
    NoConnectionFound,
    SingularConstraint,
    Stalled,
)
from .flow import FlowOptions, Trajectory, bump_flow, gradient_flow, projected_flow
from .refold import Motion, RefoldOptions, refold

__all__ = [
    "__version__",
    "ArmChart",
    "CycleChart",
    "LinkageKind",
    "embed",
    "validate",
    "lr_function",
    "project_straight",
    "project_cocircular",
    "FlowOptions",
    "Trajectory",
    "gradient_flow",
    "projected_flow",
    "bump_flow",
    "RefoldOptions",
    "Motion",
    "refold",
    "LinkfoldError",
    "InvalidInput",
    "InvalidParams",
    "InfeasibleLengths",
    "DegenerateTriangle",
    "ConvergenceFailure",
    "SingularConstraint",
    "NearContact",
    "Stalled",
    "NoConnectionFound",
]
