#!/usr/bin/env python3
"""
Flow-aware mask rasterization

Turns a centerline into the BEV instance mask the mask head predicts: a
binary probability map of the cells within half the instance width of the
polyline, paired with the polyline's quad-direction label.

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
from dataclasses import dataclass

import numpy as np

from bev_geometry import DEFAULT_GRID, BevGridSpec, as_polyline, point_segment_distances
from kit_errors import ContractViolation
from quad_direction import QuadDirection, encode_quad_direction

logger = logging.getLogger(__name__)

DEFAULT_WIDTH_CELLS = 4


@dataclass(frozen=True, eq=False)
class ProbMap:
    """rows x cols probability map on a BEV grid."""

    grid: BevGridSpec
    values: np.ndarray
    out_of_grid: bool = False

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.shape != self.grid.shape:
            raise ContractViolation(f"Map shape {values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(values)) or values.min(initial=0.0) < 0.0 or values.max(initial=0.0) > 1.0:
            raise ContractViolation("Probability map values must lie in [0, 1]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def nonzero_cells(self) -> set:
        return {(int(r), int(c)) for r, c in zip(*np.nonzero(self.values))}


@dataclass(frozen=True, eq=False)
class FlowAwareMask:
    """Instance mask plus flow label and confidence."""

    prob: ProbMap
    direction: QuadDirection
    confidence: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ContractViolation(f"Mask confidence must be in [0, 1], got {self.confidence}")

    @property
    def grid(self) -> BevGridSpec:
        return self.prob.grid


def rasterize_centerline(pl, g: BevGridSpec = DEFAULT_GRID,
                         width_cells: float = DEFAULT_WIDTH_CELLS) -> ProbMap:
    """Rasterize the x-y projection of a polyline.

    A cell is set to 1.0 when its center lies within width_cells / 2 cell
    widths of any segment; z is discarded.

    Args:
        pl: Polyline3 points
        g: Target grid
        width_cells: Instance width in cells (>= 1)

    Returns:
        ProbMap; `out_of_grid` is set when no cell was hit
    """
    if width_cells < 1:
        raise ContractViolation(f"width_cells must be >= 1, got {width_cells}")
    pts = as_polyline(pl)
    radius = width_cells / 2.0

    # cell units, cell (i, j) center at (i, j)
    u = g.x_to_row(pts[:, 0])
    v = g.y_to_col(pts[:, 1])
    values = np.zeros(g.shape, dtype=np.float64)

    for k in range(len(pts) - 1):
        a, b = (u[k], v[k]), (u[k + 1], v[k + 1])
        r0 = max(0, math.ceil(min(a[0], b[0]) - radius))
        r1 = min(g.rows - 1, math.floor(max(a[0], b[0]) + radius))
        c0 = max(0, math.ceil(min(a[1], b[1]) - radius))
        c1 = min(g.cols - 1, math.floor(max(a[1], b[1]) + radius))
        if r0 > r1 or c0 > c1:
            continue
        rr, cc = np.meshgrid(np.arange(r0, r1 + 1, dtype=np.float64),
                             np.arange(c0, c1 + 1, dtype=np.float64), indexing="ij")
        hit = point_segment_distances(rr, cc, a, b) <= radius
        values[r0:r1 + 1, c0:c1 + 1][hit] = 1.0

    out_of_grid = not values.any()
    if out_of_grid:
        logger.debug("Polyline with %d points lies outside the %dx%d grid", len(pts), g.rows, g.cols)
    return ProbMap(g, values, out_of_grid=out_of_grid)


def make_flow_aware_mask(pl, g: BevGridSpec = DEFAULT_GRID,
                         width_cells: float = DEFAULT_WIDTH_CELLS,
                         confidence: float = 1.0) -> FlowAwareMask:
    """Ground-truth flow-aware mask: rasterized band plus encoded label."""
    return FlowAwareMask(rasterize_centerline(pl, g, width_cells),
                         encode_quad_direction(pl),
                         confidence)
