import numpy as np
import pytest

from calibench import phase1, worldsim
from calibench.stereocam import DEFAULT_RIG


@pytest.fixture(scope="session")
def rig():
    return DEFAULT_RIG


@pytest.fixture(scope="session")
def default_field():
    return worldsim.make_bias_field(0, 4.55)


@pytest.fixture(scope="session")
def small_dataset(default_field, rig):
    """Cleaned coarse dataset from a reduced collection; shared across tests."""
    raw = phase1.collect(10, default_field, rig, seed=123)
    return phase1.clean(raw, rig, seed=123)


@pytest.fixture(scope="session")
def full_collection(default_field, rig):
    """Full-size 57-trajectory raw collection plus its cleaned dataset."""
    raw = phase1.collect(57, default_field, rig, seed=7)
    ds = phase1.clean(raw, rig, seed=7)
    return raw, ds
