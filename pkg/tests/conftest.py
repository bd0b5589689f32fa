import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from numeraire_mot import couplings as cp
from numeraire_mot.measures import LogNormal

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def mu():
    return LogNormal(0.2)


@pytest.fixture(scope="session")
def nu():
    return LogNormal(0.3)


@pytest.fixture(scope="session")
def hk(mu, nu):
    return cp.build_hk(mu, nu, 512)


@pytest.fixture(scope="session")
def left(mu, nu):
    return cp.build_left_monotone(mu, nu, 512)


@pytest.fixture(scope="session")
def right(mu, nu):
    return cp.build_right_monotone(mu, nu, 512)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
