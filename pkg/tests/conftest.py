import numpy as np
import pytest

from _toys import cube_mesh, icosphere, write_toy_hand

from dexsynth.hand import load_hand
from dexsynth.objects import prepare_object


@pytest.fixture(scope="session")
def toy_hand_paths(tmp_path_factory):
    out = tmp_path_factory.mktemp("toyhand")
    return write_toy_hand(out)


@pytest.fixture(scope="session")
def toy_hand(toy_hand_paths):
    return load_hand(*toy_hand_paths)


@pytest.fixture(scope="session")
def unit_cube():
    return cube_mesh(1.0)


@pytest.fixture(scope="session")
def sphere_object():
    """Acceptance sphere: radius 0.08 m."""
    return prepare_object(icosphere(3, 0.08), "sphere", 1.0, master_seed=0)


@pytest.fixture(scope="session")
def cube_object():
    """Acceptance cube: edge 0.1 m."""
    return prepare_object(cube_mesh(0.1), "cube", 1.0, master_seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
