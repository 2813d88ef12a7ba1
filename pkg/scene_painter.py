#!/usr/bin/env python3
"""
Static SVG rendering of a scene

Draws the BEV region, ground-truth and predicted centerlines with a flow
arrow at their ends, and lane-lane edges between successor endpoints.
Screen up is vehicle +x, screen left is vehicle +y.

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
import math
import os
from pathlib import Path
from typing import Iterable, Tuple

from PyQt6.QtCore import QPointF, QRectF, QSize, Qt
from PyQt6.QtGui import QBrush, QColor, QGuiApplication, QPainter, QPen, QPolygonF
from PyQt6.QtSvg import QSvgGenerator

from bev_geometry import DEFAULT_GRID, BevGridSpec, Centerline

logger = logging.getLogger(__name__)

PIXELS_PER_METER = 8
MARGIN = 20
GT_COLOR = QColor(40, 120, 40)
PRED_COLOR = QColor(200, 60, 40)
EDGE_COLOR = QColor(60, 90, 200)
BACKGROUND = QColor(245, 245, 240)

_app = None


def _ensure_gui():
    """QPainter needs a QGuiApplication; headless runs use the offscreen platform."""
    global _app
    if QGuiApplication.instance() is None:
        os.environ.setdefault("QT_QPA_PLATFORM", "offscreen")
        _app = QGuiApplication([])


class ScenePainter:
    """Maps vehicle coordinates onto a canvas and draws scene elements."""

    def __init__(self, grid: BevGridSpec = DEFAULT_GRID, scale: float = PIXELS_PER_METER):
        self.grid = grid
        self.scale = scale

    @property
    def size(self) -> QSize:
        width = (self.grid.y_max - self.grid.y_min) * self.scale + 2 * MARGIN
        height = (self.grid.x_max - self.grid.x_min) * self.scale + 2 * MARGIN
        return QSize(int(math.ceil(width)), int(math.ceil(height)))

    def to_canvas(self, x: float, y: float) -> QPointF:
        return QPointF(MARGIN + (self.grid.y_max - y) * self.scale,
                       MARGIN + (self.grid.x_max - x) * self.scale)

    def draw_region(self, painter: QPainter):
        painter.fillRect(QRectF(0, 0, self.size.width(), self.size.height()), BACKGROUND)
        painter.setPen(QPen(Qt.GlobalColor.black, 1))
        painter.setBrush(Qt.BrushStyle.NoBrush)
        top_left = self.to_canvas(self.grid.x_max, self.grid.y_max)
        bottom_right = self.to_canvas(self.grid.x_min, self.grid.y_min)
        painter.drawRect(QRectF(top_left, bottom_right))
        # ego vehicle
        painter.setBrush(QBrush(Qt.GlobalColor.black))
        painter.drawEllipse(self.to_canvas(0.0, 0.0), 3, 3)

    def draw_centerline(self, painter: QPainter, cl: Centerline, color: QColor, width: float = 2.0):
        points = [self.to_canvas(p[0], p[1]) for p in cl.polyline]
        painter.setPen(QPen(color, width))
        painter.setBrush(Qt.BrushStyle.NoBrush)
        painter.drawPolyline(QPolygonF(points))
        self._draw_arrow_head(painter, points[-2], points[-1], color)

    def _draw_arrow_head(self, painter: QPainter, tail: QPointF, tip: QPointF, color: QColor):
        dx, dy = tip.x() - tail.x(), tip.y() - tail.y()
        norm = math.hypot(dx, dy)
        if norm == 0:
            return
        ux, uy = dx / norm, dy / norm
        size = 6.0
        left = QPointF(tip.x() - size * ux + 0.5 * size * uy, tip.y() - size * uy - 0.5 * size * ux)
        right = QPointF(tip.x() - size * ux - 0.5 * size * uy, tip.y() - size * uy + 0.5 * size * ux)
        painter.setBrush(QBrush(color))
        painter.drawPolygon(QPolygonF([tip, left, right]))

    def draw_edges(self, painter: QPainter, lanes, edges: Iterable[Tuple[str, str]]):
        painter.setPen(QPen(EDGE_COLOR, 1, Qt.PenStyle.DashLine))
        for source, target in edges:
            if source in lanes and target in lanes:
                end = lanes[source].polyline[-1]
                start = lanes[target].polyline[0]
                painter.drawLine(self.to_canvas(end[0], end[1]), self.to_canvas(start[0], start[1]))


def render_scene_svg(scene, path, grid: BevGridSpec = DEFAULT_GRID) -> Path:
    """Write an SVG picture of one scene."""
    _ensure_gui()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    scene_painter = ScenePainter(grid)

    generator = QSvgGenerator()
    generator.setFileName(str(path))
    generator.setSize(scene_painter.size)
    generator.setViewBox(QRectF(0, 0, scene_painter.size.width(), scene_painter.size.height()))
    generator.setTitle(f"frame {scene.frame_id}")

    painter = QPainter()
    if not painter.begin(generator):
        raise OSError(f"Cannot paint to {path}")
    try:
        painter.setRenderHint(QPainter.RenderHint.Antialiasing)
        scene_painter.draw_region(painter)
        scene_painter.draw_edges(painter, scene.gt_centerlines, scene.gt_topology_ll)
        for cl in scene.gt_centerlines.values():
            scene_painter.draw_centerline(painter, cl, GT_COLOR, 3.0)
        for cl in scene.pred_centerlines.values():
            scene_painter.draw_centerline(painter, cl, PRED_COLOR, 1.5)
    finally:
        painter.end()
    logger.info("Rendered frame %s to %s", scene.frame_id, path)
    return path
