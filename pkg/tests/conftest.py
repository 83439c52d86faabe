import numpy as np
import pytest

from kahler_core import InvariantParams, build_k3_rule, k3_scheme, round_sphere_rule


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run the full-resolution reproduction tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def k3_rule():
    """Coarse K3 rule, enough to span degree 6"""
    return build_k3_rule(12, 12, 10, 8)


@pytest.fixture(scope="session")
def round_rule():
    return round_sphere_rule(400)


@pytest.fixture
def identity_k3():
    def make(k):
        scheme = k3_scheme(k)
        return InvariantParams(scheme, scheme.diagonal.astype(float))
    return make


def surface_points(n, radius=0.9, seed=7):
    """Random points of w^2 = x^6 + y^6 + 1 with |x|, |y| < radius"""
    rng = np.random.default_rng(seed)
    x = radius * np.sqrt(rng.uniform(0, 1, n)) * np.exp(2j * np.pi * rng.uniform(0, 1, n))
    y = radius * np.sqrt(rng.uniform(0, 1, n)) * np.exp(2j * np.pi * rng.uniform(0, 1, n))
    w = np.sqrt(1 + x ** 6 + y ** 6)
    return np.stack([x, y, w], axis=1)


@pytest.fixture
def surface_sample():
    return surface_points
