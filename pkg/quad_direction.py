#!/usr/bin/env python3
"""
Quad-direction labels
Encodes the flow of a centerline as one of up/down/left/right by majority
voting over consecutive displacements, and orders unordered point sets by
such a label.

Vehicle-frame mapping: +x votes up, -x down, +y left, -y right.

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

from enum import Enum

import numpy as np

from bev_geometry import Axis, as_points
from kit_errors import ContractViolation


class QuadDirection(Enum):
    """Coarse flow direction; value is the JSON spelling."""
    UP = "up"
    DOWN = "down"
    LEFT = "left"
    RIGHT = "right"

    @property
    def opposite(self) -> "QuadDirection":
        return _OPPOSITES[self]

    @property
    def dominant_axis(self) -> Axis:
        """Axis the label moves along: x for up/down, y for left/right."""
        return Axis.X if self in (QuadDirection.UP, QuadDirection.DOWN) else Axis.Y

    @property
    def ascending(self) -> bool:
        """True when flow runs towards larger dominant-axis values."""
        return self in (QuadDirection.UP, QuadDirection.LEFT)

    @classmethod
    def parse(cls, label: str) -> "QuadDirection":
        try:
            return cls(label.strip().lower())
        except (ValueError, AttributeError):
            raise ContractViolation(f"Unknown direction label {label!r}; expected up/down/left/right")


_OPPOSITES = {
    QuadDirection.UP: QuadDirection.DOWN,
    QuadDirection.DOWN: QuadDirection.UP,
    QuadDirection.LEFT: QuadDirection.RIGHT,
    QuadDirection.RIGHT: QuadDirection.LEFT,
}


def _axis_label(axis: Axis, delta: float) -> QuadDirection:
    if axis is Axis.X:
        return QuadDirection.UP if delta >= 0 else QuadDirection.DOWN
    return QuadDirection.LEFT if delta >= 0 else QuadDirection.RIGHT


def encode_quad_direction(pl) -> QuadDirection:
    """Assign a quad-direction label by majority voting.

    Each consecutive pair votes independently on both axes; zero deltas cast
    no vote. A tie between the two axes' top counts (or a tie inside one
    axis) is settled by the end-minus-start displacement, with the 45 degree
    boundary going to up/down.

    Raises:
        ContractViolation: fewer than 2 points
    """
    pts = as_points(pl)
    if len(pts) < 2:
        raise ContractViolation(f"Direction encoding needs >= 2 points, got {len(pts)}")

    deltas = np.diff(pts[:, :2], axis=0)
    up = int(np.count_nonzero(deltas[:, 0] > 0))
    down = int(np.count_nonzero(deltas[:, 0] < 0))
    left = int(np.count_nonzero(deltas[:, 1] > 0))
    right = int(np.count_nonzero(deltas[:, 1] < 0))
    total_dx, total_dy = (pts[-1, :2] - pts[0, :2]).tolist()

    vertical, horizontal = max(up, down), max(left, right)
    if vertical > horizontal:
        if up != down:
            return QuadDirection.UP if up > down else QuadDirection.DOWN
        return _axis_label(Axis.X, total_dx)
    if horizontal > vertical:
        if left != right:
            return QuadDirection.LEFT if left > right else QuadDirection.RIGHT
        return _axis_label(Axis.Y, total_dy)

    # cross-axis tie
    if abs(total_dx) >= abs(total_dy):
        return _axis_label(Axis.X, total_dx)
    return _axis_label(Axis.Y, total_dy)


def sort_points_by_label(points, d: QuadDirection) -> np.ndarray:
    """Order an unordered point set along the label's flow.

    up -> ascending x, down -> descending x, left -> ascending y,
    right -> descending y. Equal keys keep their input order.
    """
    pts = as_points(points)
    if len(pts) < 2:
        raise ContractViolation(f"Sorting needs >= 2 points, got {len(pts)}")
    key = pts[:, d.dominant_axis.value]
    if not d.ascending:
        key = -key
    order = np.argsort(key, kind="stable")
    return pts[order]
