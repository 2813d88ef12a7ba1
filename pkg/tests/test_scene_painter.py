"""Tests for SVG scene rendering."""

import pytest

pytest.importorskip("PyQt6.QtSvg")

from bev_geometry import DEFAULT_GRID  # noqa: E402
from scene_painter import ScenePainter, render_scene_svg  # noqa: E402
from scene_simulator import generate_synthetic_scene  # noqa: E402


def test_canvas_mapping():
    painter = ScenePainter(DEFAULT_GRID, scale=1.0)
    assert painter.size.width() == 52 + 40
    assert painter.size.height() == 100 + 40
    front_left = painter.to_canvas(DEFAULT_GRID.x_max, DEFAULT_GRID.y_max)
    assert (front_left.x(), front_left.y()) == (20.0, 20.0)
    ego = painter.to_canvas(0.0, 0.0)
    assert (ego.x(), ego.y()) == (20.0 + 26.0, 20.0 + 50.0)


def test_render_writes_svg(tmp_path):
    path = render_scene_svg(generate_synthetic_scene(2), tmp_path / "out" / "scene.svg")
    text = path.read_text()
    assert "<svg" in text
    assert "frame 000002" in text
