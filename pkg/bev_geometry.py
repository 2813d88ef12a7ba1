#!/usr/bin/env python3
"""
BEV geometry primitives
Implements the coordinate conventions shared by every other module:
- Vehicle frame: +x forward, +y left, +z up (meters)
- BEV grid: row index follows x, column index follows y, half-open cells
- Polyline resampling and least-squares polynomial fitting
- Discrete Frechet and Chamfer distances between polylines

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

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np
from numba import njit
from numpy.polynomial import polynomial as P
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from kit_errors import ContractViolation, DegenerateFitError, require

DEFAULT_CHAMFER_SAMPLES = 11


class Point3(NamedTuple):
    """Vehicle-frame point in meters."""
    x: float
    y: float
    z: float = 0.0


class GridCell(NamedTuple):
    """BEV grid cell; row follows x, col follows y."""
    row: int
    col: int


class Axis(Enum):
    """Dominant axis tag for polynomial fits."""
    X = 0
    Y = 1

    @property
    def other(self) -> "Axis":
        return Axis.Y if self is Axis.X else Axis.X


@dataclass(frozen=True)
class BevGridSpec:
    """World <-> grid mapping of the BEV raster."""

    rows: int = 200
    cols: int = 104
    cell_size: float = 0.5
    x_min: float = -50.0
    y_min: float = -26.0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ContractViolation(f"Grid must have at least one cell, got {self.rows}x{self.cols}")
        if not self.cell_size > 0:
            raise ContractViolation(f"cell_size must be > 0, got {self.cell_size}")

    @property
    def x_max(self) -> float:
        return self.x_min + self.rows * self.cell_size

    @property
    def y_max(self) -> float:
        return self.y_min + self.cols * self.cell_size

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.cols

    def is_on_grid(self, row: int, col: int) -> bool:
        """Check if indices address a grid cell."""
        return 0 <= row < self.rows and 0 <= col < self.cols

    def world_to_grid(self, p: Sequence[float]) -> Optional[GridCell]:
        """Cell containing a world point, or None outside the grid."""
        row = math.floor((p[0] - self.x_min) / self.cell_size)
        col = math.floor((p[1] - self.y_min) / self.cell_size)
        if not self.is_on_grid(row, col):
            return None
        return GridCell(row, col)

    def grid_to_world(self, cell: Sequence[int]) -> Point3:
        """World coordinates of a cell center (z = 0)."""
        row, col = int(cell[0]), int(cell[1])
        if not self.is_on_grid(row, col):
            raise ContractViolation(f"Cell ({row}, {col}) outside {self.rows}x{self.cols} grid")
        return Point3(self.x_min + (row + 0.5) * self.cell_size,
                      self.y_min + (col + 0.5) * self.cell_size,
                      0.0)

    def locate(self, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Vectorized world_to_grid.

        Returns:
            Tuple of (rows, cols, inside) where rows/cols are int64 and only
            meaningful where `inside` is True.
        """
        rows = np.floor((np.asarray(x, dtype=np.float64) - self.x_min) / self.cell_size)
        cols = np.floor((np.asarray(y, dtype=np.float64) - self.y_min) / self.cell_size)
        inside = (rows >= 0) & (rows < self.rows) & (cols >= 0) & (cols < self.cols)
        rows = np.where(inside, rows, 0).astype(np.int64)
        cols = np.where(inside, cols, 0).astype(np.int64)
        return rows, cols, inside

    def row_to_x(self, row):
        """World x of (possibly fractional) row coordinates measured at cell centers."""
        return self.x_min + (np.asarray(row, dtype=np.float64) + 0.5) * self.cell_size

    def col_to_y(self, col):
        """World y of (possibly fractional) column coordinates measured at cell centers."""
        return self.y_min + (np.asarray(col, dtype=np.float64) + 0.5) * self.cell_size

    def x_to_row(self, x):
        """Inverse of row_to_x, in fractional cell units."""
        return (np.asarray(x, dtype=np.float64) - self.x_min) / self.cell_size - 0.5

    def y_to_col(self, y):
        """Inverse of col_to_y, in fractional cell units."""
        return (np.asarray(y, dtype=np.float64) - self.y_min) / self.cell_size - 0.5


DEFAULT_GRID = BevGridSpec()


def world_to_grid(p: Sequence[float], g: BevGridSpec = DEFAULT_GRID) -> Optional[GridCell]:
    """Map a world point to its grid cell; None when outside."""
    return g.world_to_grid(p)


def grid_to_world(c: Sequence[int], g: BevGridSpec = DEFAULT_GRID) -> Point3:
    """Map a grid cell to its center point."""
    return g.grid_to_world(c)


def as_points(points, min_points: int = 1) -> np.ndarray:
    """Coerce a point sequence to a float64 (n, 3) array; 2D input gets z = 0."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1 and pts.size in (2, 3):
        pts = pts[None, :]
    if pts.ndim != 2 or pts.shape[1] not in (2, 3):
        raise ContractViolation(f"Expected an (n, 2) or (n, 3) point array, got shape {pts.shape}")
    if pts.shape[1] == 2:
        pts = np.column_stack([pts, np.zeros(len(pts))])
    if len(pts) < min_points:
        raise ContractViolation(f"Expected at least {min_points} points, got {len(pts)}")
    if not np.all(np.isfinite(pts)):
        raise ContractViolation("Point coordinates must be finite")
    return pts


def as_polyline(points) -> np.ndarray:
    """Validate a Polyline3: >= 2 finite points, no consecutive duplicates."""
    pts = as_points(points, min_points=2)
    if np.any(np.all(np.diff(pts, axis=0) == 0.0, axis=1)):
        raise ContractViolation("Polyline has consecutive identical points")
    return pts


class CenterlineSource(Enum):
    """Where a centerline came from."""
    MASK = "mask"
    BEZIER = "bezier"
    FUSED = "fused"
    GROUND_TRUTH = "ground_truth"


@dataclass(frozen=True, eq=False)
class Centerline:
    """Ordered 3D polyline with a confidence; point order encodes flow."""

    polyline: np.ndarray
    confidence: float = 1.0
    source: CenterlineSource = CenterlineSource.GROUND_TRUTH

    def __post_init__(self):
        pts = as_polyline(self.polyline).copy()
        pts.setflags(write=False)
        object.__setattr__(self, "polyline", pts)
        if not 0.0 <= self.confidence <= 1.0:
            raise ContractViolation(f"Centerline confidence must be in [0, 1], got {self.confidence}")

    def __len__(self):
        return len(self.polyline)

    def __eq__(self, other):
        if not isinstance(other, Centerline):
            return NotImplemented
        return (self.source == other.source
                and self.confidence == other.confidence
                and np.array_equal(self.polyline, other.polyline))

    __hash__ = None

    def reversed(self) -> "Centerline":
        return Centerline(self.polyline[::-1].copy(), self.confidence, self.source)

    def resampled(self, n: int) -> "Centerline":
        return Centerline(arc_length_resample(self.polyline, n), self.confidence, self.source)


def _drop_repeats(pts: np.ndarray) -> np.ndarray:
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(np.diff(pts, axis=0) != 0.0, axis=1)
    return pts[keep]


def arc_length_resample(pl, n: int) -> np.ndarray:
    """Resample a polyline to n points equally spaced in arc length.

    Args:
        pl: (m, 2|3) point sequence
        n: Output point count (>= 2)

    Returns:
        (n, 3) array; first/last points equal the input endpoints
    """
    if n < 2:
        raise ContractViolation(f"Resample count must be >= 2, got {n}")
    pts = _drop_repeats(as_points(pl))
    if len(pts) == 1:
        return np.repeat(pts, n, axis=0)

    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    s = np.concatenate(([0.0], np.cumsum(seg)))
    targets = np.linspace(0.0, s[-1], n)
    out = np.column_stack([np.interp(targets, s, pts[:, k]) for k in range(3)])
    out[0] = pts[0]
    out[-1] = pts[-1]
    return out


def polyline_length(pl) -> float:
    pts = as_points(pl)
    return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())


@njit
def _dfd_table(dist):
    p, q = dist.shape
    ret = np.empty((p, q), dtype=np.float64)
    ret[0, 0] = dist[0, 0]
    for i in range(1, p):
        ret[i, 0] = max(ret[i - 1, 0], dist[i, 0])
    for j in range(1, q):
        ret[0, j] = max(ret[0, j - 1], dist[0, j])
    for i in range(1, p):
        for j in range(1, q):
            ret[i, j] = max(min(ret[i - 1, j], ret[i, j - 1], ret[i - 1, j - 1]), dist[i, j])
    return ret


def discrete_frechet(a, b) -> float:
    """Discrete Frechet distance over the m x n coupling lattice."""
    pa, pb = as_points(a), as_points(b)
    return float(_dfd_table(cdist(pa, pb))[-1, -1])


def chamfer(a, b, n_samples: int = DEFAULT_CHAMFER_SAMPLES) -> float:
    """Symmetric mean nearest-neighbour distance after resampling both inputs."""
    pa, pb = as_points(a), as_points(b)
    if len(pa) > 1:
        pa = arc_length_resample(pa, n_samples)
    if len(pb) > 1:
        pb = arc_length_resample(pb, n_samples)
    d_ab, _ = cKDTree(pb).query(pa)
    d_ba, _ = cKDTree(pa).query(pb)
    return 0.5 * (float(np.mean(d_ab)) + float(np.mean(d_ba)))


@dataclass(frozen=True)
class PolynomialFit:
    """Least-squares polynomial v = f(u) along a dominant axis."""

    coefficients: np.ndarray  # lowest power first
    dominant_axis: Axis

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, u):
        return P.polyval(np.asarray(u, dtype=np.float64), self.coefficients)

    def curve(self, u) -> np.ndarray:
        """(len(u), 2) points in (x, y) order."""
        u = np.asarray(u, dtype=np.float64)
        v = self(u)
        if self.dominant_axis is Axis.X:
            return np.column_stack([u, v])
        return np.column_stack([v, u])


def polyfit(points, dominant_axis: Axis = Axis.X, degree: int = 3) -> PolynomialFit:
    """Fit the non-dominant coordinate as a polynomial of the dominant one.

    The effective degree is clamped to the number of distinct dominant-axis
    values minus one.

    Raises:
        ContractViolation: fewer than 2 points or degree < 1
        DegenerateFitError: all dominant-axis values identical
    """
    pts = np.asarray(points, dtype=np.float64)
    require(pts.ndim == 2 and pts.shape[1] >= 2, f"Expected (n, 2) points, got shape {pts.shape}")
    require(len(pts) >= 2, f"polyfit needs >= 2 points, got {len(pts)}")
    require(degree >= 1, f"polyfit degree must be >= 1, got {degree}")

    u = pts[:, dominant_axis.value]
    v = pts[:, dominant_axis.other.value]
    distinct = np.unique(u).size
    if distinct < 2:
        raise DegenerateFitError(f"All {dominant_axis.name.lower()} values equal {u[0]}")

    effective = min(degree, len(pts) - 1, distinct - 1)
    coefficients = P.polyfit(u, v, effective)
    return PolynomialFit(np.asarray(coefficients), dominant_axis)


def point_segment_distances(px: np.ndarray, py: np.ndarray,
                            a: Sequence[float], b: Sequence[float]) -> np.ndarray:
    """Euclidean distance from points (px, py) to the 2D segment a-b."""
    ax, ay = float(a[0]), float(a[1])
    dx, dy = float(b[0]) - ax, float(b[1]) - ay
    length_sq = dx * dx + dy * dy
    if length_sq == 0.0:
        return np.hypot(px - ax, py - ay)
    t = np.clip(((px - ax) * dx + (py - ay) * dy) / length_sq, 0.0, 1.0)
    return np.hypot(px - (ax + t * dx), py - (ay + t * dy))
