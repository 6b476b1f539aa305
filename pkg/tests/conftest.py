import pytest
from hypothesis import HealthCheck, settings

from clfcascade.harness import load_scenario

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def baseline():
    return load_scenario("baseline")
