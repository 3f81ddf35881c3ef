from __future__ import annotations

import pytest

from aiuflow import fixtures
from aiuflow.metrics import Thresholds


@pytest.fixture(scope="session")
def hotel_spec():
    return fixtures.load_bundled_spec("hotel-reservation")


@pytest.fixture(scope="session")
def gallery_spec():
    return fixtures.load_bundled_spec("gallery-tour")


@pytest.fixture(scope="session")
def minimal_spec():
    return fixtures.load_bundled_spec("minimal")


@pytest.fixture(scope="session")
def handheld():
    return fixtures.load_bundled_device("paper-handheld")


@pytest.fixture(scope="session")
def desktop():
    return fixtures.load_bundled_device("desktop-browser")


@pytest.fixture(scope="session")
def thresholds():
    return Thresholds()
