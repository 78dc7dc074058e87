import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from linkfold import geom, sampling
from linkfold.chart import arm_embed
from linkfold.estimators import Convexifier, Refolder, Straightener


def arms(n, m=5, seed=0):
    rng = np.random.default_rng(seed)
    return np.array([arm_embed(sampling.random_arm(rng, m)).ravel() for _ in range(n)])


def polygons(n, m=6, seed=0):
    rng = np.random.default_rng(seed)
    return np.array([sampling.random_simple_polygon(rng, m).ravel() for _ in range(n)])


def test_straightener():
    X = arms(3)
    out = Straightener(step=2.0).fit_transform(X)
    assert out.shape == X.shape
    assert np.allclose(out.reshape(3, -1, 2)[:, :, 1], 0, atol=1e-3)


def test_convexifier_modes():
    X = polygons(2)
    est = Convexifier()
    out = est.fit(X).transform(X)
    assert est.terminations_ == ["converged", "converged"]
    for row in out:
        assert np.all(geom.turning_angles(row.reshape(-1, 2)) > 0)
    conf = Convexifier(mode="config", grad_tol=1e-4).fit_transform(X[:1])
    pts = conf.reshape(-1, 2)
    assert np.hypot(*(np.roll(pts, -1, 0) - pts).T).sum() == pytest.approx(1.0, abs=1e-3)


def test_params_and_clone():
    est = Convexifier(mode="config", step=3.0)
    assert est.get_params()["step"] == 3.0
    twin = clone(est)
    assert twin.get_params() == est.get_params() and twin is not est


def test_pipeline_and_errors():
    X = arms(2)
    out = make_pipeline(Straightener(step=2.0)).fit_transform(X)
    assert out.shape == X.shape
    with pytest.raises(NotFittedError):
        Straightener().transform(X)
    with pytest.raises(ValueError):
        Straightener(mode="other").fit(X)
    with pytest.raises(ValueError):
        Straightener().fit(X[:, :-1])
    with pytest.raises(ValueError):
        Straightener().fit(X).transform(arms(1, m=6))


def test_refolder_positions():
    rng = np.random.default_rng(1)
    p0 = sampling.random_cycle_linkage(rng, 6)
    p1 = sampling.random_walk_cycle(rng, p0)
    from linkfold.chart import embed

    X = np.array([embed(p1).ravel(), embed(p0).ravel()])
    start = Refolder(closed=True, position=0.0, samples=16).fit(X)
    assert np.allclose(start.transform(X[1:]), X[1:], atol=1e-9)
    end = Refolder(closed=True, position=1.0, samples=16).fit(X)
    out = end.transform(X[1:])[0].reshape(-1, 2)
    assert np.allclose(out, embed(start.target_), atol=1e-9)
    assert len(end.motions_) == 1 and end.motions_[0].all_valid
    with pytest.raises(ValueError):
        Refolder(position=2.0).fit(X)
