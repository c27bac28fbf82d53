import numpy as np
import pytest

from hypothesis import settings

settings.register_profile("ci", derandomize=True)
settings.load_profile("ci")

from gwising import OffspringPmf


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def dirac2():
    return OffspringPmf.dirac(2)


@pytest.fixture
def half12():
    return OffspringPmf.from_dict({1: 0.5, 2: 0.5})


@pytest.fixture
def half13():
    return OffspringPmf.from_dict({1: 0.5, 3: 0.5})
