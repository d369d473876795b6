import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from revtorus.profile import canonical_profile, random_profile

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def canon():
    return canonical_profile()


@pytest.fixture(scope="session")
def randoms():
    rng = np.random.default_rng(7)
    return [random_profile(rng) for _ in range(5)]
