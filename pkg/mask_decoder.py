#!/usr/bin/env python3
"""
Quad-direction label-aware mask decoding
Converts a flow-aware instance mask into an ordered centerline in three
stages:
- Probability-aware center point extraction (row-wise expectation for
  up/down labels, column-wise for left/right)
- Point fine-tuning: polynomial fit, dense evaluation, arc-length
  resampling to a fixed point count
- Sorting of the point set along the label's flow

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
from typing import Dict, Hashable, List, NamedTuple, Tuple

import numpy as np

from bev_geometry import (Axis, Centerline, CenterlineSource, Point3, arc_length_resample,
                          polyfit)
from event_system import EventPublisher, PipelineEventType
from kit_errors import ConfigurationError, DecodeFailure, DegenerateFitError, ErrorKind
from mask_rasterizer import FlowAwareMask
from quad_direction import QuadDirection, sort_points_by_label

logger = logging.getLogger(__name__)


class ScoredPoint(NamedTuple):
    """Extracted center point and the probability backing it."""
    position: Point3
    score: float


@dataclass(frozen=True)
class DecoderConfig:
    """Mask decoding parameters.

    threshold_p: foreground and validity threshold
    poly_degree: degree of the fine-tuning polynomial
    n_out: output point count
    end_trim_cells: trimmed by decode_mask from both ends of the fitted
        span, in cells; matches the round caps of a rasterized band of
        twice this width
    """

    threshold_p: float = 0.95
    poly_degree: int = 3
    n_out: int = 11
    end_trim_cells: float = 2.0

    def __post_init__(self):
        if not 0.0 < self.threshold_p < 1.0:
            raise ConfigurationError(f"threshold_p must be in (0, 1), got {self.threshold_p}")
        if self.poly_degree < 1:
            raise ConfigurationError(f"poly_degree must be >= 1, got {self.poly_degree}")
        if self.n_out < 2:
            raise ConfigurationError(f"n_out must be >= 2, got {self.n_out}")
        if self.end_trim_cells < 0:
            raise ConfigurationError(f"end_trim_cells must be >= 0, got {self.end_trim_cells}")


def extract_center_points(m: FlowAwareMask, cfg: DecoderConfig = DecoderConfig()) -> List[ScoredPoint]:
    """Stage 1: probability-weighted location expectation per row or column.

    For up/down labels each row with foreground yields
    R = sum(P*M*col) / sum(P*M) and the score P[row, floor(R)]; left/right
    labels do the same per column over rows. Points whose score does not
    exceed threshold_p are discarded.
    """
    grid = m.grid
    prob = m.prob.values
    weights = np.where(prob > cfg.threshold_p, prob, 0.0)

    # scan along the non-dominant axis
    row_wise = m.direction.dominant_axis is Axis.X
    if not row_wise:
        prob, weights = prob.T, weights.T

    mass = weights.sum(axis=1)
    lines = np.flatnonzero(mass > 0)
    if lines.size == 0:
        return []

    positions = np.arange(prob.shape[1], dtype=np.float64)
    expectation = (weights[lines] @ positions) / mass[lines]
    lookup = np.clip(np.floor(expectation).astype(np.int64), 0, prob.shape[1] - 1)
    scores = prob[lines, lookup]
    valid = scores > cfg.threshold_p

    lines, expectation, scores = lines[valid], expectation[valid], scores[valid]
    if row_wise:
        xs, ys = grid.row_to_x(lines), grid.col_to_y(expectation)
    else:
        xs, ys = grid.row_to_x(expectation), grid.col_to_y(lines)
    return [ScoredPoint(Point3(float(x), float(y), 0.0), float(s))
            for x, y, s in zip(xs, ys, scores)]


def refine_points(pts: List[ScoredPoint], d: QuadDirection,
                  cfg: DecoderConfig = DecoderConfig(), cell_size: float = 0.5,
                  end_trim: float = 0.0) -> np.ndarray:
    """Stage 2: polynomial fit, dense evaluation, arc-length sparsification.

    The fit is evaluated once per cell width across the dominant-axis span
    of the inputs, shortened by end_trim meters at both ends when the span
    is long enough.

    Returns:
        (n_out, 3) points ascending along the label's dominant axis, z = 0

    Raises:
        DecodeFailure: fewer than 2 points or a degenerate fit
    """
    if len(pts) < 2:
        raise DecodeFailure(f"Need >= 2 center points, got {len(pts)}", ErrorKind.TOO_FEW_POINTS)
    xy = np.array([[p.position.x, p.position.y] for p in pts], dtype=np.float64)
    axis = d.dominant_axis
    try:
        fit = polyfit(xy, axis, cfg.poly_degree)
    except DegenerateFitError as e:
        raise DecodeFailure(str(e), ErrorKind.DEGENERATE_FIT)

    lo, hi = float(xy[:, axis.value].min()), float(xy[:, axis.value].max())
    if end_trim > 0 and hi - lo > 2.0 * end_trim + cell_size:
        lo, hi = lo + end_trim, hi - end_trim

    count = max(2, int(math.ceil((hi - lo) / cell_size)) + 1)
    dense = fit.curve(np.linspace(lo, hi, count))
    out = arc_length_resample(dense, cfg.n_out)
    out[:, 2] = 0.0
    return out


def decode_mask(m: FlowAwareMask, cfg: DecoderConfig = DecoderConfig()) -> Centerline:
    """Full mask-to-centerline conversion; ordered per the mask's label.

    Raises:
        DecodeFailure: empty extraction or degenerate fit
    """
    pts = extract_center_points(m, cfg)
    if not pts:
        raise DecodeFailure("Mask has no valid foreground points", ErrorKind.EMPTY_EXTRACTION)
    cell = m.grid.cell_size
    refined = refine_points(pts, m.direction, cfg, cell, cfg.end_trim_cells * cell)
    ordered = sort_points_by_label(refined, m.direction)
    return Centerline(ordered, m.confidence, CenterlineSource.MASK)


def decode_masks(masks: Dict[Hashable, FlowAwareMask],
                 cfg: DecoderConfig = DecoderConfig()) -> Tuple[Dict[Hashable, Centerline],
                                                                Dict[Hashable, DecodeFailure]]:
    """Decode many instances; failed ones are dropped and reported.

    Returns:
        Tuple of (decoded centerlines, failures) keyed like the input
    """
    decoded, failures = {}, {}
    for key, mask in masks.items():
        try:
            decoded[key] = decode_mask(mask, cfg)
        except DecodeFailure as e:
            failures[key] = e
            logger.warning("Dropping instance %s: %s", key, e)
            EventPublisher.publish_event(PipelineEventType.DECODE_FAILED, {
                'instance': key,
                'kind': e.kind.value,
                'reason': str(e),
            })
            continue
        EventPublisher.publish_event(PipelineEventType.CENTERLINE_DECODED, {
            'instance': key,
            'points': len(decoded[key]),
        })
    return decoded, failures
