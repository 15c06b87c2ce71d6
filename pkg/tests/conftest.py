import numpy as np
import pytest

from pdsvqs.models import build_model


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture(scope="session")
def toy_a():
    return build_model("toy_a")


@pytest.fixture(scope="session")
def toy_b():
    return build_model("toy_b")


@pytest.fixture(scope="session")
def h2():
    return build_model("h2")


@pytest.fixture(scope="session")
def heisenberg():
    return build_model("heisenberg")
