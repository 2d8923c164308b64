import numpy as np
import pytest

from povm_coherence.quantum import (
    DensityMatrix,
    ProjectiveMeasurement,
    plus_state,
    trine_povm,
)


@pytest.fixture
def plus():
    return plus_state(2)


@pytest.fixture
def basis2():
    return ProjectiveMeasurement.computational(2)


@pytest.fixture
def mixed2():
    return DensityMatrix.maximally_mixed(2)


@pytest.fixture
def trine():
    return trine_povm()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
