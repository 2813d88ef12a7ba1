#!/usr/bin/env python3
"""
Service container for the BEV topology pipeline

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.

This program is distributed in the hope that it will be useful,
but WITHOUT ANY WARRANTY; without even the implied warranty of
MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
GNU General Public License for more details.

You should have received a copy of the GNU General Public License
along with this program.  If not, see <https://www.gnu.org/licenses/>.
"""

from typing import Any, Callable, Dict, Optional, Set

from bev_geometry import DEFAULT_GRID, BevGridSpec
from kit_config import KitSettings
from kit_errors import ConfigurationError
from mask_decoder import DecoderConfig
from topology_metrics import EvalOptions


class DependencyContainer:
    """Named services: fixed instances, per-call factories and lazy singletons."""

    def __init__(self):
        self._services: Dict[str, Any] = {}
        self._factories: Dict[str, Callable[["DependencyContainer"], Any]] = {}
        self._singleton_names: Set[str] = set()

    def register_service(self, name: str, service: Any):
        """Register a ready instance; replaces any factory of that name."""
        self._factories.pop(name, None)
        self._singleton_names.discard(name)
        self._services[name] = service

    def register_factory(self, name: str, factory: Callable[["DependencyContainer"], Any]):
        """Register a factory called on every lookup."""
        self._services.pop(name, None)
        self._singleton_names.discard(name)
        self._factories[name] = factory

    def register_singleton(self, name: str, factory: Callable[["DependencyContainer"], Any]):
        """Register a factory whose first result is cached."""
        self._services.pop(name, None)
        self._factories[name] = factory
        self._singleton_names.add(name)

    def get(self, name: str) -> Any:
        if name in self._services:
            return self._services[name]
        if name not in self._factories:
            raise KeyError(f"Service '{name}' not found")
        service = self._factories[name](self)
        if name in self._singleton_names:
            self._services[name] = service
        return service

    def has(self, name: str) -> bool:
        return name in self._services or name in self._factories


class ServiceProvider:
    """Class-level access to the active container."""

    _container: Optional[DependencyContainer] = None

    @classmethod
    def set_container(cls, container: Optional[DependencyContainer]):
        cls._container = container

    @classmethod
    def get_service(cls, name: str) -> Any:
        if cls._container is None:
            raise ConfigurationError("Service container not initialized")
        return cls._container.get(name)

    @classmethod
    def has_service(cls, name: str) -> bool:
        return cls._container is not None and cls._container.has(name)


def build_container(settings: Optional[KitSettings] = None, grid: BevGridSpec = DEFAULT_GRID,
                    decoder_config: Optional[DecoderConfig] = None,
                    eval_options: Optional[EvalOptions] = None) -> DependencyContainer:
    """Container with the pipeline's default services.

    The event bus is created lazily because it is a QObject.
    """
    from event_system import EventBus

    container = DependencyContainer()
    container.register_service("settings", settings if settings is not None else KitSettings.from_env())
    container.register_service("grid", grid)
    container.register_service("decoder_config", decoder_config or DecoderConfig())
    container.register_service("eval_options", eval_options or EvalOptions())
    container.register_singleton("event_bus", lambda c: EventBus())
    return container
