#!/usr/bin/env python3
"""
Multi-height-bin Lift-Splat voxel pooling
Implements:
- Lifting per-pixel features through a depth distribution into the
  vehicle frame
- Height-bin assignment with half-open bins
- A per-point reference pooling and a sort + segmented-reduction kernel
  parallelized with numba
- A throughput benchmark over height-bin configurations

Output channels are bin-major: bin b occupies channels [b*C, (b+1)*C).

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

import hashlib
import logging
import math
import re
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from numba import njit, prange

from bev_geometry import DEFAULT_GRID, BevGridSpec
from event_system import EventPublisher, PipelineEventType
from kit_errors import ConfigurationError, ContractViolation

logger = logging.getLogger(__name__)

DEPTH_SUM_TOLERANCE = 1e-5


@dataclass(frozen=True)
class HeightBinConfig:
    """(lower bound, upper bound, bin length) of the pooled height range."""

    z_min: float = -10.0
    z_max: float = 10.0
    bin_len: float = 1.0

    def __post_init__(self):
        if not self.z_max > self.z_min:
            raise ConfigurationError(f"z_max ({self.z_max}) must exceed z_min ({self.z_min})")
        if not self.bin_len > 0:
            raise ConfigurationError(f"bin_len must be > 0, got {self.bin_len}")
        bins = (self.z_max - self.z_min) / self.bin_len
        if abs(bins - round(bins)) > 1e-9 or round(bins) < 1:
            raise ConfigurationError(
                f"Height range {self.z_max - self.z_min} is not a whole number of {self.bin_len} m bins")

    @property
    def num_bins(self) -> int:
        return int(round((self.z_max - self.z_min) / self.bin_len))

    @property
    def label(self) -> str:
        return f"({self.z_min:g},{self.z_max:g},{self.bin_len:g})"

    @classmethod
    def parse(cls, text: str) -> "HeightBinConfig":
        """Parse "(lower,upper,length)"."""
        parts = [p for p in re.split(r"[\s,]+", text.strip().strip("()[]")) if p]
        if len(parts) != 3:
            raise ConfigurationError(f"Height bin config must be '(lower,upper,length)', got {text!r}")
        try:
            z_min, z_max, bin_len = (float(p) for p in parts)
        except ValueError:
            raise ConfigurationError(f"Height bin config has non-numeric fields: {text!r}")
        return cls(z_min, z_max, bin_len)


# pillar baseline first, then finer / taller configurations
HEIGHT_BIN_TABLE: Tuple[HeightBinConfig, ...] = (
    HeightBinConfig(-5.0, 3.0, 8.0),
    HeightBinConfig(-5.0, 3.0, 2.0),
    HeightBinConfig(-5.0, 3.0, 1.0),
    HeightBinConfig(-5.0, 5.0, 1.0),
    HeightBinConfig(-10.0, 10.0, 1.0),
)

DEFAULT_HEIGHT_BINS = HEIGHT_BIN_TABLE[-1]


@dataclass(frozen=True, eq=False)
class CameraRig:
    """One camera's features, depth distribution and calibration."""

    feature: np.ndarray  # C x H x W
    depth_dist: np.ndarray  # N_d x H x W
    depth_bin_centers: np.ndarray  # N_d
    intrinsics: np.ndarray  # 3 x 3
    rotation: np.ndarray  # 3 x 3, camera -> vehicle
    translation: np.ndarray  # 3

    def __post_init__(self):
        feature = np.asarray(self.feature, dtype=np.float32)
        depth = np.asarray(self.depth_dist, dtype=np.float32)
        centers = np.asarray(self.depth_bin_centers, dtype=np.float64)
        if feature.ndim != 3 or depth.ndim != 3 or feature.shape[1:] != depth.shape[1:]:
            raise ContractViolation(
                f"feature {feature.shape} and depth_dist {depth.shape} must share H x W")
        if centers.shape != (depth.shape[0],):
            raise ContractViolation(f"Expected {depth.shape[0]} depth bin centers, got shape {centers.shape}")
        if np.any(np.diff(centers) <= 0):
            raise ContractViolation("depth_bin_centers must be strictly increasing")
        if np.any(depth < 0) or np.any(depth.sum(axis=0) > 1.0 + DEPTH_SUM_TOLERANCE):
            raise ContractViolation("depth_dist must be non-negative with per-pixel sums <= 1")
        for name, shape in (("intrinsics", (3, 3)), ("rotation", (3, 3)), ("translation", (3,))):
            if np.asarray(getattr(self, name)).shape != shape:
                raise ContractViolation(f"{name} must have shape {shape}")
        object.__setattr__(self, "feature", feature)
        object.__setattr__(self, "depth_dist", depth)
        object.__setattr__(self, "depth_bin_centers", centers)
        for name in ("intrinsics", "rotation", "translation"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))


@dataclass(frozen=True, eq=False)
class LiftedPoints:
    """Vehicle-frame points with depth-weighted features (struct of arrays)."""

    positions: np.ndarray  # N x 3, float64
    features: np.ndarray  # N x C, float32

    def __post_init__(self):
        positions = np.ascontiguousarray(self.positions, dtype=np.float64).reshape(-1, 3)
        features = np.ascontiguousarray(self.features, dtype=np.float32)
        if features.ndim != 2 or len(features) != len(positions):
            raise ContractViolation(
                f"positions {positions.shape} and features {features.shape} disagree")
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "features", features)

    def __len__(self):
        return len(self.positions)

    @property
    def channels(self) -> int:
        return self.features.shape[1]

    @classmethod
    def empty(cls, channels: int) -> "LiftedPoints":
        return cls(np.zeros((0, 3)), np.zeros((0, channels), dtype=np.float32))

    def take(self, index) -> "LiftedPoints":
        return LiftedPoints(self.positions[index], self.features[index])


@dataclass(frozen=True, eq=False)
class BevTensor:
    """(B*C) x rows x cols pooled features, bin-major channel blocks."""

    values: np.ndarray
    num_bins: int
    channels_per_bin: int

    def __post_init__(self):
        if self.values.ndim != 3 or self.values.shape[0] != self.num_bins * self.channels_per_bin:
            raise ContractViolation(
                f"Tensor shape {self.values.shape} inconsistent with {self.num_bins} bins x "
                f"{self.channels_per_bin} channels")

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    def bin_block(self, b: int) -> np.ndarray:
        c = self.channels_per_bin
        return self.values[b * c:(b + 1) * c]

    def collapse_bins(self) -> np.ndarray:
        """Sum over height bins: C x rows x cols."""
        return self.values.reshape(self.num_bins, self.channels_per_bin,
                                   *self.values.shape[1:]).sum(axis=0)

    def digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.values).tobytes()).hexdigest()


def lift_points(cam: CameraRig) -> LiftedPoints:
    """Lift every (pixel, depth bin) pair into the vehicle frame.

    point = R @ (K^-1 @ (u + 0.5, v + 0.5, 1) * d_j) + t
    feature = depth_dist[j, v, u] * feature[:, v, u]
    Points are ordered depth bin, then row, then column.
    """
    try:
        k_inv = np.linalg.inv(cam.intrinsics)
    except np.linalg.LinAlgError:
        raise ConfigurationError("Camera intrinsics are singular")
    if not np.all(np.isfinite(k_inv)):
        raise ConfigurationError("Camera intrinsics are singular")

    channels, height, width = cam.feature.shape
    n_depth = len(cam.depth_bin_centers)
    us, vs = np.meshgrid(np.arange(width) + 0.5, np.arange(height) + 0.5)
    pixels = np.column_stack([us.ravel(), vs.ravel(), np.ones(us.size)])
    rays = pixels @ k_inv.T

    cam_points = cam.depth_bin_centers[:, None, None] * rays[None, :, :]
    positions = cam_points @ cam.rotation.T + cam.translation

    pixel_features = cam.feature.reshape(channels, -1).T  # HW x C
    weights = cam.depth_dist.reshape(n_depth, -1)  # N_d x HW
    features = weights[:, :, None] * pixel_features[None, :, :]
    return LiftedPoints(positions.reshape(-1, 3), features.reshape(-1, channels))


def height_bin_index(z: float, h: HeightBinConfig = DEFAULT_HEIGHT_BINS) -> Optional[int]:
    """Bin of height z, or None outside [z_min, z_max)."""
    if not h.z_min <= z < h.z_max:
        return None
    return min(math.floor((z - h.z_min) / h.bin_len), h.num_bins - 1)


def height_bin_indices(z: np.ndarray, h: HeightBinConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized height_bin_index: (bins, inside)."""
    z = np.asarray(z, dtype=np.float64)
    inside = (z >= h.z_min) & (z < h.z_max)
    bins = np.floor((z - h.z_min) / h.bin_len)
    bins = np.clip(np.where(inside, bins, 0), 0, h.num_bins - 1).astype(np.int64)
    return bins, inside


def _empty_tensor(channels: int, g: BevGridSpec, h: HeightBinConfig) -> np.ndarray:
    return np.zeros((h.num_bins, channels, g.rows, g.cols), dtype=np.float32)


def pool_naive(pts: LiftedPoints, g: BevGridSpec = DEFAULT_GRID,
               h: HeightBinConfig = DEFAULT_HEIGHT_BINS) -> BevTensor:
    """Reference pooling: one point at a time, in input order."""
    out = _empty_tensor(pts.channels, g, h)
    features = pts.features
    for i, (x, y, z) in enumerate(pts.positions.tolist()):
        cell = g.world_to_grid((x, y, z))
        if cell is None:
            continue
        b = height_bin_index(z, h)
        if b is None:
            continue
        out[b, :, cell.row, cell.col] += features[i]
    return BevTensor(out.reshape(-1, g.rows, g.cols), h.num_bins, pts.channels)


@njit(parallel=True)
def _segment_sums(features, order, starts, total):
    n_seg = starts.shape[0]
    channels = features.shape[1]
    out = np.zeros((n_seg, channels), dtype=np.float32)
    for s in prange(n_seg):
        begin = starts[s]
        end = starts[s + 1] if s + 1 < n_seg else total
        for k in range(begin, end):
            src = order[k]
            for ch in range(channels):
                out[s, ch] += features[src, ch]
    return out


def voxel_keys(pts: LiftedPoints, g: BevGridSpec, h: HeightBinConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Flat (bin, row, col) keys of the points that land in the volume.

    Returns:
        Tuple of (indices of kept points, their keys)
    """
    rows, cols, inside = g.locate(pts.positions[:, 0], pts.positions[:, 1])
    bins, in_range = height_bin_indices(pts.positions[:, 2], h)
    kept = np.flatnonzero(inside & in_range)
    keys = (bins[kept] * g.rows + rows[kept]) * g.cols + cols[kept]
    return kept, keys


def pool_fast(pts: LiftedPoints, g: BevGridSpec = DEFAULT_GRID,
              h: HeightBinConfig = DEFAULT_HEIGHT_BINS) -> BevTensor:
    """Sort points by voxel key, then reduce each key segment in parallel.

    A stable sort keeps input order inside each segment, so every voxel is
    summed in the same order as pool_naive.
    """
    out = _empty_tensor(pts.channels, g, h)
    kept, keys = voxel_keys(pts, g, h)
    if kept.size:
        perm = np.argsort(keys, kind="stable")
        order = kept[perm]
        sorted_keys = keys[perm]
        boundary = np.ones(len(sorted_keys), dtype=bool)
        boundary[1:] = sorted_keys[1:] != sorted_keys[:-1]
        starts = np.flatnonzero(boundary)
        sums = _segment_sums(pts.features, order, starts, len(order))

        segment_keys = sorted_keys[starts]
        plane = g.rows * g.cols
        b, rest = np.divmod(segment_keys, plane)
        r, c = np.divmod(rest, g.cols)
        out[b, :, r, c] = sums
    return BevTensor(out.reshape(-1, g.rows, g.cols), h.num_bins, pts.channels)


def synthetic_points(n: int, channels: int = 4, seed: int = 0, g: BevGridSpec = DEFAULT_GRID,
                     z_range: Tuple[float, float] = (-12.0, 12.0), spill: float = 2.0) -> LiftedPoints:
    """Uniform random lifted points covering the grid plus a margin."""
    rng = np.random.default_rng(seed)
    positions = np.column_stack([
        rng.uniform(g.x_min - spill, g.x_max + spill, n),
        rng.uniform(g.y_min - spill, g.y_max + spill, n),
        rng.uniform(z_range[0], z_range[1], n),
    ])
    features = rng.standard_normal((n, channels)).astype(np.float32)
    return LiftedPoints(positions, features)


@dataclass(frozen=True)
class BenchRow:
    """One timing measurement."""
    config: str
    impl: str
    points: int
    seconds: float
    points_per_sec: float
    result_hash: str

    def to_dict(self) -> Dict[str, object]:
        return {
            'config': self.config,
            'impl': self.impl,
            'points': self.points,
            'seconds': self.seconds,
            'points_per_sec': self.points_per_sec,
            'result_hash': self.result_hash,
        }


_POOLERS = {'naive': pool_naive, 'fast': pool_fast}


def bench_pool(configs: Sequence[HeightBinConfig] = HEIGHT_BIN_TABLE, n_points: int = 1_000_000,
               channels: int = 4, seed: int = 0, g: BevGridSpec = DEFAULT_GRID,
               impls: Sequence[str] = ('naive', 'fast')) -> List[BenchRow]:
    """Time the pooling implementations on one seeded point cloud per run."""
    unknown = set(impls) - set(_POOLERS)
    if unknown:
        raise ConfigurationError(f"Unknown pooling implementations: {sorted(unknown)}")
    pts = synthetic_points(n_points, channels, seed, g)
    # JIT warm-up outside the timed region
    pool_fast(synthetic_points(64, channels, seed, g), g, configs[0] if configs else DEFAULT_HEIGHT_BINS)

    rows = []
    for h in configs:
        for impl in impls:
            start = time.perf_counter()
            result = _POOLERS[impl](pts, g, h)
            seconds = time.perf_counter() - start
            row = BenchRow(h.label, impl, n_points, seconds,
                           n_points / seconds if seconds > 0 else float("inf"),
                           result.digest())
            logger.info("pool %-5s %s: %.3fs (%.0f points/s)", impl, h.label, seconds, row.points_per_sec)
            EventPublisher.publish_event(PipelineEventType.BENCH_ROW_MEASURED, row.to_dict())
            rows.append(row)
    return rows
