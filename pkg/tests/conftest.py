import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from uc_kit import LpBall
from uc_kit.moduli import Budget

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# small search effort for unit tests; the acceptance suite uses the full default
SMALL = Budget(restarts=200, rounds=10)


@pytest.fixture
def small_budget():
    return SMALL


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(params=[2.0, 3.0, 4.0])
def lp_ball(request):
    return LpBall(request.param, 1.0, 3)
