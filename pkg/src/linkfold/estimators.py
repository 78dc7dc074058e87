"""scikit-learn style wrappers.

Each row of ``X`` is one linkage written as a flattened vertex list
``[x0, y0, x1, y1, ...]``; all rows of one call share the vertex count.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .chart import LinkageKind, arm_extract, cycle_extract, embed
from .energy import lr_function
from .errors import InvalidInput
from .flow import FlowOptions, gradient_flow, projected_flow
from .refold import RefoldOptions, refold

__all__ = ["Straightener", "Convexifier", "Refolder"]


def _rows(X):
    X = check_array(X, dtype=np.float64)
    if X.shape[1] % 2:
        raise ValueError(f"rows must hold x, y pairs; got {X.shape[1]} columns")
    return X


def _check_mode(mode):
    if mode not in ("linkage", "config"):
        raise ValueError(f"mode must be 'linkage' or 'config', got {mode!r}")


class _FlowTransformer(TransformerMixin, BaseEstimator):
    closed = False

    def __init__(self, mode="linkage", step=0.5, grad_tol=1e-6, t_max=1e4):
        self.mode = mode
        self.step = step
        self.grad_tol = grad_tol
        self.t_max = t_max

    def _options(self):
        return FlowOptions(step=self.step, grad_tol=self.grad_tol, t_max=self.t_max)

    def fit(self, X, y=None):
        _check_mode(self.mode)
        X = _rows(X)
        self.n_features_in_ = X.shape[1]
        self.n_vertices_ = X.shape[1] // 2
        return self

    def transform(self, X):
        check_is_fitted(self, "n_vertices_")
        X = _rows(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        opts = self._options()
        out = np.empty_like(X)
        terminations = []
        for i, row in enumerate(X):
            traj = self._flow(row.reshape(-1, 2), opts)
            out[i] = embed(traj.final).ravel()
            terminations.append(traj.termination)
        self.terminations_ = terminations
        return out


class Straightener(_FlowTransformer):
    """Flow each arm to its straight state; ``mode='config'`` also relaxes lengths to 1."""

    def _flow(self, pts, opts):
        arm = arm_extract(pts)
        if self.mode == "linkage":
            return gradient_flow(lr_function(LinkageKind.ARM_LINKAGE, arm.rho), arm, opts)
        return gradient_flow(lr_function(LinkageKind.ARM_CONFIG), arm, opts)


class Convexifier(_FlowTransformer):
    """Flow each counterclockwise polygon to a convex one.

    With ``mode='linkage'`` side lengths are preserved; with ``mode='config'``
    they are free and the flow ends at the regular polygon of perimeter 1.
    """

    closed = True

    def __init__(self, mode="linkage", step=8.0, grad_tol=1e-8, t_max=1e4):
        super().__init__(mode=mode, step=step, grad_tol=grad_tol, t_max=t_max)

    def _flow(self, pts, opts):
        if self.mode == "linkage":
            cyc = cycle_extract(pts)
            return projected_flow(lr_function(LinkageKind.CYCLE_LINKAGE, cyc.lengths), cyc, opts)
        return gradient_flow(lr_function(LinkageKind.CYCLE_CONFIG), arm_extract(pts), opts)


class Refolder(TransformerMixin, BaseEstimator):
    """Connect each row to a fixed target linkage with the same lengths.

    ``fit`` takes the target as the first row of ``X``.  ``transform``
    returns, per row, the state a fraction ``position`` of the way along
    the motion (0 is the row itself, 1 is the target); the full motions
    are kept in ``motions_``.
    """

    def __init__(self, closed=False, mode="linkage", position=0.5, delta=0.25, samples=64):
        self.closed = closed
        self.mode = mode
        self.position = position
        self.delta = delta
        self.samples = samples

    def _kind(self):
        if self.closed:
            return LinkageKind.CYCLE_LINKAGE if self.mode == "linkage" else LinkageKind.CYCLE_CONFIG
        return LinkageKind.ARM_LINKAGE if self.mode == "linkage" else LinkageKind.ARM_CONFIG

    def _state(self, row):
        pts = row.reshape(-1, 2)
        if self._kind() is LinkageKind.CYCLE_LINKAGE:
            return cycle_extract(pts)
        return arm_extract(pts)

    def fit(self, X, y=None):
        _check_mode(self.mode)
        if not 0.0 <= self.position <= 1.0:
            raise ValueError(f"position must lie in [0, 1], got {self.position}")
        X = _rows(X)
        self.n_features_in_ = X.shape[1]
        self.target_ = self._state(X[0])
        return self

    def transform(self, X):
        check_is_fitted(self, "target_")
        X = _rows(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        opts = RefoldOptions(delta=self.delta, samples=self.samples)
        out = np.empty_like(X)
        self.motions_ = []
        for i, row in enumerate(X):
            try:
                motion = refold(self._state(row), self.target_, opts, kind=self._kind())
            except InvalidInput as exc:
                raise ValueError(f"row {i}: {exc}") from None
            self.motions_.append(motion)
            k = int(round(self.position * (len(motion.frames) - 1)))
            out[i] = embed(motion.frames[k]).ravel()
        return out
