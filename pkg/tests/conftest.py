import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "linkfold", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("linkfold")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def fd_gradient(fun, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fun(x + e) - fun(x - e)) / (2 * h)
    return g
