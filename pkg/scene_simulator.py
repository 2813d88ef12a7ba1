#!/usr/bin/env python3
"""
Synthetic scenes and prediction perturbation
Generates seeded frames whose ground truth satisfies the decoder's
assumptions (cubic lanes strictly monotone along a dominant axis with
slopes below 45 degrees), a lane graph that is acyclic, and traffic
elements in image space. Predictions start as a copy of the ground truth
and can be degraded with PerturbConfig.

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
import zlib
from dataclasses import dataclass, fields
from typing import Any, Dict, List, Mapping, Optional, Tuple

import networkx as nx
import numpy as np

from bev_geometry import Axis, Centerline, CenterlineSource, arc_length_resample
from bezier_fusion import BezierCurve, bezier_sample
from kit_errors import ConfigurationError
from scene_io import SceneAnnotation
from topology_metrics import NUM_TE_ATTRIBUTES, TopologyEdges, TrafficElement

logger = logging.getLogger(__name__)

# lane region, one meter inside the default grid on every side
ROI_X = (-48.0, 48.0)
ROI_Y = (-24.0, 24.0)
MIN_LANE_LENGTH = 15.0
MAX_LANE_LENGTH = {Axis.X: 60.0, Axis.Y: 40.0}
MAX_LATERAL_RATIO = 0.15
SUCCESSOR_RADIUS = 2.0
CHAIN_JITTER = 0.5
GT_POINTS = 11
DENSE_POINTS = 50
IMAGE_SIZE = (1920.0, 1080.0)


@dataclass(frozen=True)
class SimulationConfig:
    """Synthetic dataset parameters."""

    seed: int = 0
    n_lanes: int = 6
    topology_density: float = 0.7
    n_traffic_elements: int = 3
    chain_probability: float = 0.6
    frames: int = 1

    def __post_init__(self):
        if self.n_lanes < 1:
            raise ConfigurationError(f"n_lanes must be >= 1, got {self.n_lanes}")
        if self.n_traffic_elements < 0:
            raise ConfigurationError(f"n_traffic_elements must be >= 0, got {self.n_traffic_elements}")
        for name in ("topology_density", "chain_probability"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigurationError(f"{name} must be in [0, 1], got {getattr(self, name)}")
        if self.frames < 1:
            raise ConfigurationError(f"frames must be >= 1, got {self.frames}")


@dataclass(frozen=True)
class PerturbConfig:
    """Prediction degradation; the all-zero config is the identity."""

    xy_noise_sigma: float = 0.0
    z_noise_sigma: float = 0.0
    drop_rate: float = 0.0
    false_positive_rate: float = 0.0
    edge_score_noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("xy_noise_sigma", "z_noise_sigma", "edge_score_noise"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be >= 0, got {getattr(self, name)}")
        for name in ("drop_rate", "false_positive_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigurationError(f"{name} must be in [0, 1], got {getattr(self, name)}")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PerturbConfig":
        if not isinstance(data, Mapping):
            raise ConfigurationError(f"Perturbation config must be an object, got {type(data).__name__}")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"Unknown perturbation fields: {sorted(unknown)}")
        try:
            values = {k: (int(v) if k == "seed" else float(v)) for k, v in data.items()}
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"Invalid perturbation value: {e}")
        return cls(**values)


def _bounds(axis: Axis) -> Tuple[float, float]:
    return ROI_X if axis is Axis.X else ROI_Y


def random_monotone_lane(rng: np.random.Generator, start: Optional[np.ndarray] = None,
                         axis: Optional[Axis] = None, sign: Optional[int] = None,
                         n_points: int = DENSE_POINTS) -> Optional[np.ndarray]:
    """Sample a cubic Bezier lane strictly monotone along its dominant axis.

    The four control points are equispaced along the dominant axis with
    lateral offsets of at most 0.15 lane lengths, so the lateral coordinate
    is a cubic in the dominant one and its slope stays below 0.9.

    Returns:
        (n_points, 3) array with z = 0, or None when a lane of minimum
        length does not fit from `start`
    """
    axis = axis if axis is not None else (Axis.X if rng.random() < 0.6 else Axis.Y)
    sign = sign if sign is not None else int(rng.choice((-1, 1)))
    u_lo, u_hi = _bounds(axis)
    v_lo, v_hi = _bounds(axis.other)

    if start is None:
        length = rng.uniform(MIN_LANE_LENGTH, MAX_LANE_LENGTH[axis])
        slack = u_hi - u_lo - length
        u0 = u_lo + rng.uniform(0.0, slack)
        if sign < 0:
            u0 += length
        margin = MAX_LATERAL_RATIO * length
        v0 = rng.uniform(v_lo + margin, v_hi - margin)
        lateral_room = margin
    else:
        u0 = float(start[axis.value])
        v0 = float(np.clip(start[axis.other.value], v_lo, v_hi))
        room = (u_hi - u0) if sign > 0 else (u0 - u_lo)
        if room < MIN_LANE_LENGTH:
            return None
        length = rng.uniform(MIN_LANE_LENGTH, min(room, MAX_LANE_LENGTH[axis]))
        lateral_room = max(0.0, min(MAX_LATERAL_RATIO * length, v0 - v_lo, v_hi - v0))

    offsets = np.concatenate(([0.0], rng.uniform(-lateral_room, lateral_room, 3)))
    dominant = u0 + sign * length * np.arange(4) / 3.0
    controls = np.zeros((4, 3))
    controls[:, axis.value] = dominant
    controls[:, axis.other.value] = v0 + offsets
    return bezier_sample(BezierCurve(controls), n_points).polyline.copy()


def _lane_graph(ends: List[np.ndarray], starts: List[np.ndarray], ids: List[str],
                density: float, rng: np.random.Generator) -> List[Tuple[str, str]]:
    """Successor edges start-near-end, thinned by density, kept acyclic."""
    graph = nx.DiGraph()
    graph.add_nodes_from(ids)
    for i, end in enumerate(ends):
        for j, start in enumerate(starts):
            if i == j or np.linalg.norm(end[:2] - start[:2]) > SUCCESSOR_RADIUS:
                continue
            if rng.random() >= density:
                continue
            if nx.has_path(graph, ids[j], ids[i]):
                continue
            graph.add_edge(ids[i], ids[j])
    assert nx.is_directed_acyclic_graph(graph)
    return sorted(graph.edges())


def _random_traffic_element(rng: np.random.Generator) -> TrafficElement:
    width, height = IMAGE_SIZE
    w, h = rng.uniform(20.0, 120.0, 2)
    x1, y1 = rng.uniform(0.0, width - w), rng.uniform(0.0, height - h)
    return TrafficElement((x1, y1, x1 + w, y1 + h), int(rng.integers(0, NUM_TE_ATTRIBUTES)))


def generate_synthetic_scene(seed: int, n_lanes: int = 6, topology_density: float = 0.7,
                             n_traffic_elements: int = 3, chain_probability: float = 0.6,
                             frame_id: Optional[str] = None) -> SceneAnnotation:
    """Deterministic synthetic frame with predictions equal to ground truth."""
    SimulationConfig(seed, n_lanes, topology_density, n_traffic_elements, chain_probability)
    rng = np.random.default_rng(seed)
    frame_id = frame_id if frame_id is not None else f"{seed:06d}"

    lanes: List[np.ndarray] = []
    heading: List[Tuple[Axis, int]] = []
    while len(lanes) < n_lanes:
        lane = None
        if lanes and rng.random() < chain_probability:
            k = int(rng.integers(0, len(lanes)))
            axis, sign = heading[k]
            jitter = rng.uniform(-CHAIN_JITTER, CHAIN_JITTER, 3) * np.array([1.0, 1.0, 0.0])
            lane = random_monotone_lane(rng, lanes[k][-1] + jitter, axis, sign)
            if lane is not None:
                heading.append((axis, sign))
        if lane is None:
            axis = Axis.X if rng.random() < 0.6 else Axis.Y
            sign = int(rng.choice((-1, 1)))
            lane = random_monotone_lane(rng, None, axis, sign)
            heading.append((axis, sign))
        lanes.append(lane)

    lane_ids = [f"lane_{i:02d}" for i in range(n_lanes)]
    gt_lanes = {lid: Centerline(arc_length_resample(lane, GT_POINTS)) for lid, lane in zip(lane_ids, lanes)}
    gt_ll = _lane_graph([l[-1] for l in lanes], [l[0] for l in lanes], lane_ids, topology_density, rng)

    te_ids = [f"te_{i:02d}" for i in range(n_traffic_elements)]
    gt_te = {tid: _random_traffic_element(rng) for tid in te_ids}
    gt_lt = []
    for tid in te_ids:
        for lid in lane_ids:
            if rng.random() < topology_density / len(lane_ids):
                gt_lt.append((lid, tid))

    logger.debug("Frame %s: %d lanes, %d ll edges, %d lt edges", frame_id, n_lanes, len(gt_ll), len(gt_lt))
    return SceneAnnotation(
        frame_id=frame_id,
        gt_centerlines=gt_lanes,
        gt_topology_ll=gt_ll,
        gt_traffic_elements=gt_te,
        gt_topology_lt=gt_lt,
        pred_centerlines={k: Centerline(c.polyline, 1.0, CenterlineSource.FUSED) for k, c in gt_lanes.items()},
        pred_topology_ll=TopologyEdges((s, t, 1.0) for s, t in gt_ll),
        pred_traffic_elements=dict(gt_te),
        pred_topology_lt=TopologyEdges((s, t, 1.0) for s, t in gt_lt),
    )


def generate_dataset(cfg: SimulationConfig) -> List[SceneAnnotation]:
    """cfg.frames consecutive seeds starting at cfg.seed."""
    return [generate_synthetic_scene(cfg.seed + i, cfg.n_lanes, cfg.topology_density,
                                     cfg.n_traffic_elements, cfg.chain_probability)
            for i in range(cfg.frames)]


def frame_rng(seed: int, frame_id: str) -> np.random.Generator:
    """Generator keyed by seed and frame id."""
    return np.random.default_rng([seed, zlib.crc32(frame_id.encode("utf-8"))])


def perturb_centerline(cl: Centerline, rng: np.random.Generator, xy_sigma: float,
                       z_sigma: float) -> Centerline:
    pts = cl.polyline.copy()
    if xy_sigma > 0:
        pts[:, :2] += rng.normal(0.0, xy_sigma, (len(pts), 2))
    if z_sigma > 0:
        pts[:, 2] += rng.normal(0.0, z_sigma, len(pts))
    return Centerline(pts, cl.confidence, cl.source)


def _jitter_edges(edges: TopologyEdges, keep: set, sigma: float, rng: np.random.Generator,
                  target_kept=None) -> TopologyEdges:
    out = []
    for source, target, score in edges:
        if source not in keep or (target_kept is not None and target not in target_kept):
            continue
        if sigma > 0:
            score = float(np.clip(score + rng.normal(0.0, sigma), 0.0, 1.0))
        out.append((source, target, score))
    return TopologyEdges(out)


def perturb_predictions(scene: SceneAnnotation, cfg: PerturbConfig) -> SceneAnnotation:
    """Degrade a scene's predictions; ground truth is shared, not modified."""
    rng = frame_rng(cfg.seed, scene.frame_id)

    preds: Dict[str, Centerline] = {}
    for lid in sorted(scene.pred_centerlines):
        if cfg.drop_rate > 0 and rng.random() < cfg.drop_rate:
            continue
        preds[lid] = perturb_centerline(scene.pred_centerlines[lid], rng, cfg.xy_noise_sigma, cfg.z_noise_sigma)
    dropped = len(scene.pred_centerlines) - len(preds)
    kept = set(preds)

    n_false = int(rng.poisson(cfg.false_positive_rate)) if cfg.false_positive_rate > 0 else 0
    for i in range(n_false):
        lane = random_monotone_lane(rng, n_points=GT_POINTS)
        preds[f"fp_{i:02d}"] = Centerline(lane, float(rng.uniform(0.05, 0.95)), CenterlineSource.FUSED)

    pred_ll = _jitter_edges(scene.pred_topology_ll, kept, cfg.edge_score_noise, rng, kept)
    pred_lt = _jitter_edges(scene.pred_topology_lt, kept, cfg.edge_score_noise, rng)
    logger.debug("Frame %s: dropped %d lanes, injected %d false positives", scene.frame_id, dropped, n_false)

    return SceneAnnotation(
        frame_id=scene.frame_id,
        gt_centerlines=scene.gt_centerlines,
        gt_topology_ll=scene.gt_topology_ll,
        gt_traffic_elements=scene.gt_traffic_elements,
        gt_topology_lt=scene.gt_topology_lt,
        pred_centerlines=preds,
        pred_topology_ll=pred_ll,
        pred_traffic_elements=dict(scene.pred_traffic_elements),
        pred_topology_lt=pred_lt,
    )
