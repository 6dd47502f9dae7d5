import pytest

from hipexo.configio import load_params
from hipexo.gaitdata import synth_battery


@pytest.fixture(scope="session")
def default_params():
    return load_params("default")


@pytest.fixture(scope="session")
def battery():
    """The shipped synthetic battery (3 strides per task, seed 7)."""
    return synth_battery(strides_per_task=3, seed=7)
