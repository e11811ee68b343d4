import dataclasses

import pytest

from dcsense.config import ScenarioConfig


@pytest.fixture
def default_cfg():
    return ScenarioConfig()


@pytest.fixture
def small_cfg():
    """Reduced scenario for fast functional tests."""
    return ScenarioConfig(n_su=8, n_bands=8, n_ed=16, seed=11)


def make_cfg(**overrides):
    return dataclasses.replace(ScenarioConfig(), **overrides)
