import numpy as np
import pytest

import mcrd as m
from mcrd import presets


@pytest.fixture(scope="session")
def ref_params():
    return presets.reference_params()


@pytest.fixture(scope="session")
def turing_params():
    return presets.turing_params()


@pytest.fixture(scope="session")
def turing_lambda():
    return presets.turing_lambda()


@pytest.fixture(scope="session")
def grid64():
    return m.Grid.interval(64)


@pytest.fixture(scope="session")
def grid256():
    return m.Grid.interval(256)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
