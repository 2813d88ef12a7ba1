"""Shared fixtures for the BEV topology kit tests."""

import numpy as np
import pytest
from hypothesis import settings

from dependency_injection import ServiceProvider
from event_system import EventBus, EventPublisher

# first calls pay for numba compilation
settings.register_profile("kit", deadline=None, max_examples=100)
settings.load_profile("kit")


@pytest.fixture(autouse=True)
def reset_globals():
    yield
    EventPublisher.set_event_bus(None)
    ServiceProvider.set_container(None)


@pytest.fixture
def event_bus():
    bus = EventBus()
    EventPublisher.set_event_bus(bus)
    return bus


@pytest.fixture
def recorded(event_bus):
    """Collects every published event of the requested types."""
    events = []

    def record(*event_types):
        for event_type in event_types:
            event_bus.subscribe(event_type, events.append)
        return events

    return record


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
