import numpy as np
import pytest

from zfnmr.spincore import Operator, SpinSystem
from zfnmr.stateprep import PolarizationConfig


@pytest.fixture
def system():
    return SpinSystem()


@pytest.fixture
def ideal_system():
    return SpinSystem.idealized()


@pytest.fixture
def pol(system):
    return PolarizationConfig(system=system)


@pytest.fixture
def random_state():
    """Factory for reproducible random near-identity density matrices."""

    def make(seed, scale=1e-5):
        rng = np.random.default_rng(seed)
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        h = (g + g.conj().T) / 2
        h = h - np.trace(h) / 4 * np.eye(4)
        return Operator.hermitian(np.eye(4) / 4 + scale * h)

    return make
