import pytest

from pipescale import ModelProfile, PipelineSpec


@pytest.fixture
def demo_profile():
    """The worked-example profile used throughout the unit tests."""
    return ModelProfile(gamma=10.0, epsilon=40.0, delta=2.0, eta=5.0, name="demo")


def make_spec(profile, slo_ms, n_stages=1):
    return PipelineSpec(stages=(profile,) * n_stages, slo_ms=slo_ms)
