#!/usr/bin/env python3
"""
Event System for the BEV topology pipeline

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

import logging
import time
from enum import Enum
from typing import Any, Callable, Dict, List, Optional

from PyQt6.QtCore import QObject, pyqtSignal

logger = logging.getLogger(__name__)


class PipelineEventType(Enum):
    """Pipeline event types."""
    MASK_RASTERIZED = "mask_rasterized"
    CENTERLINE_DECODED = "centerline_decoded"
    DECODE_FAILED = "decode_failed"
    CENTERLINES_FUSED = "centerlines_fused"
    SCENE_LOADED = "scene_loaded"
    SCENE_SAVED = "scene_saved"
    EVALUATION_FINISHED = "evaluation_finished"
    BENCH_ROW_MEASURED = "bench_row_measured"


class PipelineEvent:
    """Pipeline event data container."""

    def __init__(self, event_type: PipelineEventType, data: Dict[str, Any] = None):
        self.event_type = event_type
        self.data = data or {}
        self.timestamp = time.time()

    def __repr__(self):
        return f"PipelineEvent({self.event_type.value}, {self.data})"


class EventBus(QObject):
    """Event bus for pipeline events."""

    # payload dicts pass through unconverted
    decode_failed = pyqtSignal(object)
    scene_loaded = pyqtSignal(object)
    evaluation_finished = pyqtSignal(object)

    def __init__(self):
        super().__init__()
        self._listeners: Dict[PipelineEventType, List[Callable]] = {}

    def subscribe(self, event_type: PipelineEventType, callback: Callable):
        """Subscribe to an event type."""
        self._listeners.setdefault(event_type, []).append(callback)

    def unsubscribe(self, event_type: PipelineEventType, callback: Callable):
        """Unsubscribe from an event type."""
        listeners = self._listeners.get(event_type, [])
        if callback in listeners:
            listeners.remove(callback)

    def publish(self, event: PipelineEvent):
        """Publish an event to all subscribers."""
        event_type = event.event_type

        if event_type == PipelineEventType.DECODE_FAILED:
            self.decode_failed.emit(event.data)
        elif event_type == PipelineEventType.SCENE_LOADED:
            self.scene_loaded.emit(event.data)
        elif event_type == PipelineEventType.EVALUATION_FINISHED:
            self.evaluation_finished.emit(event.data)

        for callback in list(self._listeners.get(event_type, [])):
            try:
                callback(event)
            except Exception:
                logger.exception("Error in event listener for %s", event_type.value)


class EventPublisher:
    """Class-level access point used by the library modules."""

    _event_bus: Optional[EventBus] = None

    @classmethod
    def set_event_bus(cls, event_bus: Optional[EventBus]):
        """Set (or clear) the global event bus."""
        cls._event_bus = event_bus

    @classmethod
    def publish_event(cls, event_type: PipelineEventType, data: Dict[str, Any] = None):
        """Publish an event; a no-op without a bus."""
        if cls._event_bus is not None:
            cls._event_bus.publish(PipelineEvent(event_type, data))

    @classmethod
    def subscribe_to_event(cls, event_type: PipelineEventType, callback: Callable):
        """Subscribe to an event type."""
        if cls._event_bus is not None:
            cls._event_bus.subscribe(event_type, callback)

    @classmethod
    def unsubscribe_from_event(cls, event_type: PipelineEventType, callback: Callable):
        """Unsubscribe from an event type."""
        if cls._event_bus is not None:
            cls._event_bus.unsubscribe(event_type, callback)
