import logging

import pytest

from thzrrf.apps.field.services import seed_from_scene
from thzrrf.apps.scenes.config import bundled_scene_path, load_scene
from thzrrf.apps.scenes.services import generate_dataset
from thzrrf.common.geometry import SphericalGrid
from tests.factories import SeedConfigFactory


@pytest.fixture
def grid_small():
    """8 x 16 AoA grid."""
    return SphericalGrid(8, 16)


@pytest.fixture
def smoke_scene():
    """Bundled one-panel scene."""
    return load_scene(bundled_scene_path('smoke'))


@pytest.fixture
def room_scene():
    """Bundled four-wall room."""
    return load_scene(bundled_scene_path('room'))


@pytest.fixture
def smoke_dataset(smoke_scene, grid_small):
    """Six ground-truth samples of the smoke scene."""
    return generate_dataset(smoke_scene, 6, grid_small, rng_seed=7, threads=2)


@pytest.fixture
def smoke_field(smoke_scene):
    """Field seeded from the smoke scene at a coarse spacing."""
    return seed_from_scene(smoke_scene, SeedConfigFactory())


@pytest.fixture
def thz_caplog(caplog):
    """caplog wired to the project logger, which does not propagate to root."""
    logger = logging.getLogger('thzrrf')
    logger.addHandler(caplog.handler)
    caplog.set_level(logging.DEBUG, logger='thzrrf')
    yield caplog
    logger.removeHandler(caplog.handler)
