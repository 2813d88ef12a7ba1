#!/usr/bin/env python3
"""
Cubic Bezier centerlines and mask/Bezier fusion

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
from dataclasses import dataclass
from enum import Enum

import numpy as np

from bev_geometry import Centerline, CenterlineSource, Point3, arc_length_resample, as_points
from event_system import EventPublisher, PipelineEventType
from kit_errors import ContractViolation, require

logger = logging.getLogger(__name__)

NUM_CONTROL_POINTS = 4
DEFAULT_FUSION_POINTS = 11
DEFAULT_BEZIER_SAMPLES = 50


class ConfidenceMode(Enum):
    """How the fused centerline's confidence is derived."""
    MASK = "mask"
    MAX = "max"
    MEAN = "mean"


@dataclass(frozen=True, eq=False)
class BezierCurve:
    """Cubic Bezier head output: four 3D control points."""

    control_points: np.ndarray
    confidence: float = 1.0

    def __post_init__(self):
        controls = as_points(self.control_points).copy()
        if len(controls) != NUM_CONTROL_POINTS:
            raise ContractViolation(f"Cubic Bezier needs {NUM_CONTROL_POINTS} control points, got {len(controls)}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ContractViolation(f"Bezier confidence must be in [0, 1], got {self.confidence}")
        controls.setflags(write=False)
        object.__setattr__(self, "control_points", controls)

    def __eq__(self, other):
        if not isinstance(other, BezierCurve):
            return NotImplemented
        return self.confidence == other.confidence and np.array_equal(self.control_points, other.control_points)

    __hash__ = None


def bernstein_matrix(t) -> np.ndarray:
    """(len(t), 4) cubic Bernstein basis."""
    t = np.asarray(t, dtype=np.float64)
    s = 1.0 - t
    return np.column_stack([s ** 3, 3.0 * s * s * t, 3.0 * s * t * t, t ** 3])


def bezier_eval(c: BezierCurve, t: float) -> Point3:
    """Evaluate the curve at t in [0, 1]."""
    if not 0.0 <= t <= 1.0:
        raise ContractViolation(f"Bezier parameter must be in [0, 1], got {t}")
    if t == 0.0:
        return Point3(*c.control_points[0].tolist())
    if t == 1.0:
        return Point3(*c.control_points[-1].tolist())
    return Point3(*(bernstein_matrix([t]) @ c.control_points)[0].tolist())


def bezier_sample(c: BezierCurve, n: int) -> Centerline:
    """n points at uniform parameters 0, 1/(n-1), ..., 1."""
    if n < 2:
        raise ContractViolation(f"Bezier sample count must be >= 2, got {n}")
    t = np.linspace(0.0, 1.0, n)
    pts = bernstein_matrix(t) @ c.control_points
    pts[0], pts[-1] = c.control_points[0], c.control_points[-1]
    return Centerline(pts, c.confidence, CenterlineSource.BEZIER)


def chord_length_parameters(pts: np.ndarray) -> np.ndarray:
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    s = np.concatenate(([0.0], np.cumsum(seg)))
    return s / s[-1]


def bezier_fit(pl, confidence: float = 1.0) -> BezierCurve:
    """Least-squares cubic fit with chord-length parameters.

    The end control points are pinned to the input endpoints; the inner two
    solve the remaining linear least-squares problem per coordinate.
    """
    pts = as_points(pl)
    if len(pts) < NUM_CONTROL_POINTS:
        raise ContractViolation(f"Bezier fit needs >= {NUM_CONTROL_POINTS} points, got {len(pts)}")
    t = chord_length_parameters(pts)
    if not np.all(np.isfinite(t)):
        raise ContractViolation("Bezier fit needs a polyline of nonzero length")

    basis = bernstein_matrix(t)
    p0, p3 = pts[0], pts[-1]
    rhs = pts - np.outer(basis[:, 0], p0) - np.outer(basis[:, 3], p3)
    inner, *_ = np.linalg.lstsq(basis[:, 1:3], rhs, rcond=None)
    return BezierCurve(np.vstack([p0, inner, p3]), confidence)


def align_orientation(reference: Centerline, other: Centerline) -> Centerline:
    """Return `other`, reversed when that brings it closer to `reference`."""
    ref, oth = reference.polyline, other.polyline
    require(len(ref) == len(oth),
            f"Orientation alignment needs equal lengths, got {len(ref)} and {len(oth)}")
    forward = np.linalg.norm(ref - oth, axis=1).sum()
    backward = np.linalg.norm(ref - oth[::-1], axis=1).sum()
    return other.reversed() if forward > backward else other


def fuse(mask_cl: Centerline, bez_cl: Centerline,
         confidence_mode: ConfidenceMode = ConfidenceMode.MASK) -> Centerline:
    """Average both heads in x-y and take height from the Bezier head.

    f_i = ((m_x + b_x) / 2, (m_y + b_y) / 2, b_z)
    """
    m, b = mask_cl.polyline, bez_cl.polyline
    require(len(m) == len(b), f"Fusion needs equal point counts, got {len(m)} and {len(b)}")
    fused = np.empty_like(b)
    fused[:, :2] = (m[:, :2] + b[:, :2]) / 2.0
    fused[:, 2] = b[:, 2]

    if confidence_mode is ConfidenceMode.MAX:
        confidence = max(mask_cl.confidence, bez_cl.confidence)
    elif confidence_mode is ConfidenceMode.MEAN:
        confidence = (mask_cl.confidence + bez_cl.confidence) / 2.0
    else:
        confidence = mask_cl.confidence
    return Centerline(fused, confidence, CenterlineSource.FUSED)


def fuse_instance(mask_cl: Centerline, bezier, n_out: int = DEFAULT_FUSION_POINTS,
                  confidence_mode: ConfidenceMode = ConfidenceMode.MASK) -> Centerline:
    """Resample both heads to n_out, align the Bezier to the mask's flow, fuse.

    Args:
        mask_cl: Decoded mask-head centerline
        bezier: BezierCurve or an already sampled Bezier Centerline
    """
    if isinstance(bezier, BezierCurve):
        bezier = bezier_sample(bezier, max(DEFAULT_BEZIER_SAMPLES, n_out))
    mask_cl = Centerline(arc_length_resample(mask_cl.polyline, n_out), mask_cl.confidence, mask_cl.source)
    bez_cl = Centerline(arc_length_resample(bezier.polyline, n_out), bezier.confidence, bezier.source)
    aligned = align_orientation(mask_cl, bez_cl)
    if aligned is not bez_cl:
        logger.debug("Bezier head ran against the mask flow; reversed before fusion")
    fused = fuse(mask_cl, aligned, confidence_mode)
    EventPublisher.publish_event(PipelineEventType.CENTERLINES_FUSED, {
        'points': n_out,
        'confidence': fused.confidence,
    })
    return fused
