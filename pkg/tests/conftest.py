import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# campaign-scale tests override max_examples where a bigger fuzz budget is wanted
settings.register_profile(
    "default",
    deadline=None,
    max_examples=100,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
