import numpy as np
import pytest

from planarmimic.physics import SimState, default_biped, default_state


@pytest.fixture(scope="session")
def biped():
    return default_biped()


def standing_state(model, clearance: float = -1e-4) -> SimState:
    """Standing pose with foot bottoms at z = clearance (negative = slight penetration)."""
    s = default_state(model)
    s.root_pos = np.array([0.0, 1.23 + clearance])
    return s


@pytest.fixture
def standing(biped):
    return standing_state(biped)
