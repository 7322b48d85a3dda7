import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def robertson_ref():
    """RK4 reference for Robertson on [0, 100] with tau = 1e-4 (about 10 s, computed once)."""
    from mrkc.problems import robertson_reference

    return robertson_reference(100.0, 1e-4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
