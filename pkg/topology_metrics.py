#!/usr/bin/env python3
"""
Lane topology evaluation
Implements the scores of the lane topology benchmark:
- DET_l: Frechet-matched centerline mAP over 1/2/3 m thresholds
- DET_l_ch: Chamfer-matched centerline mAP over 0.5/1/1.5 m thresholds
- DET_t: per-attribute traffic element mAP at IoU 0.75
- TOP_ll / TOP_lt: vertex-centric mAP over predicted topology edges
- OLS = (DET_l + DET_t + sqrt(TOP_ll) + sqrt(TOP_lt)) / 4
- The relation score manipulation s + 1 * [s > 0.05]

AP values are pooled over all frames before integration, with predictions
ranked by confidence and ties broken by (frame id, instance id).

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
from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from typing import Dict, Hashable, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from bev_geometry import DEFAULT_CHAMFER_SAMPLES, Centerline, arc_length_resample, chamfer, discrete_frechet
from event_system import EventPublisher, PipelineEventType
from kit_errors import ConfigurationError, ContractViolation, ErrorKind, SceneFormatError, require

logger = logging.getLogger(__name__)

FRECHET_THRESHOLDS = (1.0, 2.0, 3.0)
CHAMFER_THRESHOLDS = (0.5, 1.0, 1.5)
TE_IOU_THRESHOLD = 0.75
TOP_FRECHET_THRESHOLD = 2.0
NUM_TE_ATTRIBUTES = 13

MANIPULATION_THRESHOLD = 0.05
MANIPULATION_BOOST = 1.0


@dataclass(frozen=True)
class TrafficElement:
    """Image-space traffic element box with attribute class."""

    bbox: Tuple[float, float, float, float]  # x1, y1, x2, y2 (pixels)
    attribute: int
    confidence: float = 1.0

    def __post_init__(self):
        ok, message = self.is_valid()
        if not ok:
            raise ContractViolation(message)
        object.__setattr__(self, "bbox", tuple(float(v) for v in self.bbox))

    def is_valid(self) -> Tuple[bool, str]:
        """Check box, attribute and confidence.

        Returns:
            Tuple of (is_valid, error_message)
        """
        if len(self.bbox) != 4 or not all(math.isfinite(v) for v in self.bbox):
            return False, f"Traffic element bbox must be 4 finite numbers, got {self.bbox}"
        x1, y1, x2, y2 = self.bbox
        if not (x2 > x1 and y2 > y1):
            return False, f"Traffic element bbox must have x2 > x1 and y2 > y1, got {self.bbox}"
        if isinstance(self.attribute, bool) or int(self.attribute) != self.attribute \
                or not 0 <= self.attribute < NUM_TE_ATTRIBUTES:
            return False, f"Traffic element attribute must be an integer in [0, {NUM_TE_ATTRIBUTES}), got {self.attribute}"
        if not 0.0 <= self.confidence <= 1.0:
            return False, f"Traffic element confidence must be in [0, 1], got {self.confidence}"
        return True, ""

    @property
    def area(self) -> float:
        x1, y1, x2, y2 = self.bbox
        return (x2 - x1) * (y2 - y1)


def box_iou(a: TrafficElement, b: TrafficElement) -> float:
    ax1, ay1, ax2, ay2 = a.bbox
    bx1, by1, bx2, by2 = b.bbox
    iw = min(ax2, bx2) - max(ax1, bx1)
    ih = min(ay2, by2) - max(ay1, by1)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


Edge = Tuple[Hashable, Hashable, float]


class TopologyEdges:
    """Scored directed edges, unique per (source, target).

    Scores are in [0, 1] unless `bounded` is False, which is the case after
    score manipulation.
    """

    def __init__(self, edges: Iterable[Edge] = (), bounded: bool = True):
        self.bounded = bounded
        self._scores: Dict[Tuple[Hashable, Hashable], float] = {}
        for source, target, score in edges:
            key = (source, target)
            if key in self._scores:
                raise ContractViolation(f"Duplicate topology edge {source} -> {target}")
            score = float(score)
            if not math.isfinite(score) or score < 0.0 or (bounded and score > 1.0):
                raise ContractViolation(f"Edge {source} -> {target} has score {score} outside [0, 1]")
            self._scores[key] = score

    def __iter__(self) -> Iterator[Edge]:
        for (source, target), score in self._scores.items():
            yield source, target, score

    def __len__(self):
        return len(self._scores)

    def __contains__(self, pair) -> bool:
        return tuple(pair) in self._scores

    def __eq__(self, other):
        if not isinstance(other, TopologyEdges):
            return NotImplemented
        return self._scores == other._scores

    def __repr__(self):
        return f"TopologyEdges({list(self)})"

    def score(self, source, target) -> float:
        return self._scores[(source, target)]

    def pairs(self) -> set:
        return set(self._scores)

    def outgoing(self, source) -> List[Tuple[Hashable, float]]:
        return [(t, s) for (src, t), s in self._scores.items() if src == source]

    def above(self, threshold: float) -> "TopologyEdges":
        """Edges with score strictly greater than threshold."""
        return TopologyEdges(((s, t, v) for s, t, v in self if v > threshold), self.bounded)

    def relabeled(self, source_key, target_key) -> "TopologyEdges":
        return TopologyEdges(((source_key(s), target_key(t), v) for s, t, v in self), self.bounded)


class DistanceKernel(Enum):
    """Centerline matching distance."""
    FRECHET = "frechet"
    CHAMFER = "chamfer"

    def distance(self, a: Centerline, b: Centerline, n_samples: int = DEFAULT_CHAMFER_SAMPLES) -> float:
        if self is DistanceKernel.CHAMFER:
            return chamfer(a.polyline, b.polyline, n_samples)
        return discrete_frechet(arc_length_resample(a.polyline, n_samples),
                                arc_length_resample(b.polyline, n_samples))


@dataclass(frozen=True)
class MetricConfig:
    """Thresholds of the detection and topology scores."""

    frechet_thresholds: Tuple[float, ...] = FRECHET_THRESHOLDS
    chamfer_thresholds: Tuple[float, ...] = CHAMFER_THRESHOLDS
    iou_threshold: float = TE_IOU_THRESHOLD
    top_frechet_threshold: float = TOP_FRECHET_THRESHOLD
    n_samples: int = DEFAULT_CHAMFER_SAMPLES

    def __post_init__(self):
        if not self.frechet_thresholds or not self.chamfer_thresholds:
            raise ConfigurationError("Threshold lists must not be empty")
        if any(t <= 0 for t in self.frechet_thresholds + self.chamfer_thresholds):
            raise ConfigurationError("Distance thresholds must be > 0")
        if not 0.0 < self.iou_threshold <= 1.0:
            raise ConfigurationError(f"iou_threshold must be in (0, 1], got {self.iou_threshold}")
        if self.n_samples < 2:
            raise ConfigurationError(f"n_samples must be >= 2, got {self.n_samples}")


@dataclass(frozen=True)
class MatchResult:
    """One-to-one prediction/GT assignment."""

    pairs: Tuple[Tuple[Hashable, Hashable, float], ...] = ()
    unmatched_preds: Tuple[Hashable, ...] = ()
    unmatched_gts: Tuple[Hashable, ...] = ()

    @property
    def pred_to_gt(self) -> Dict[Hashable, Hashable]:
        return {p: g for p, g, _ in self.pairs}

    @property
    def gt_to_pred(self) -> Dict[Hashable, Hashable]:
        return {g: p for p, g, _ in self.pairs}

    @property
    def matched_preds(self) -> set:
        return {p for p, _, _ in self.pairs}

    @classmethod
    def merge(cls, results: Iterable["MatchResult"]) -> "MatchResult":
        pairs, preds, gts = [], [], []
        for r in results:
            pairs.extend(r.pairs)
            preds.extend(r.unmatched_preds)
            gts.extend(r.unmatched_gts)
        return cls(tuple(pairs), tuple(preds), tuple(gts))


def _ranked_ids(confidences: Mapping[Hashable, float]) -> List[Hashable]:
    return sorted(confidences, key=lambda k: (-confidences[k], k))


def _greedy_assign(pred_ids: Sequence[Hashable], gt_ids: Sequence[Hashable],
                   cost: np.ndarray, admissible: np.ndarray) -> MatchResult:
    """Give each prediction, in order, its cheapest admissible free GT."""
    taken = np.zeros(len(gt_ids), dtype=bool)
    pairs, unmatched = [], []
    for i, pred in enumerate(pred_ids):
        free = np.flatnonzero(admissible[i] & ~taken) if len(gt_ids) else np.zeros(0, dtype=np.int64)
        if free.size == 0:
            unmatched.append(pred)
            continue
        j = int(free[np.argmin(cost[i, free])])
        taken[j] = True
        pairs.append((pred, gt_ids[j], float(cost[i, j])))
    return MatchResult(tuple(pairs), tuple(unmatched),
                       tuple(g for g, t in zip(gt_ids, taken) if not t))


def centerline_distances(preds: Mapping[Hashable, Centerline], gts: Mapping[Hashable, Centerline],
                         kernel: DistanceKernel = DistanceKernel.FRECHET,
                         n_samples: int = DEFAULT_CHAMFER_SAMPLES) -> Tuple[List, List, np.ndarray]:
    """Distance matrix with rows in ranking order and columns in id order."""
    pred_ids = _ranked_ids({k: c.confidence for k, c in preds.items()})
    gt_ids = sorted(gts)
    dist = np.empty((len(pred_ids), len(gt_ids)))
    for i, p in enumerate(pred_ids):
        for j, g in enumerate(gt_ids):
            dist[i, j] = kernel.distance(preds[p], gts[g], n_samples)
    return pred_ids, gt_ids, dist


def match_instances(preds: Mapping[Hashable, Centerline], gts: Mapping[Hashable, Centerline],
                    distance: DistanceKernel = DistanceKernel.FRECHET, threshold: float = 2.0,
                    n_samples: int = DEFAULT_CHAMFER_SAMPLES) -> MatchResult:
    """Greedy confidence-ordered matching with distance < threshold.

    Predictions are visited by descending confidence (ties by id) and take
    the nearest unmatched GT. Both centerlines are resampled to n_samples
    points by arc length first.
    """
    pred_ids, gt_ids, dist = centerline_distances(preds, gts, distance, n_samples)
    return _greedy_assign(pred_ids, gt_ids, dist, dist < threshold)


def average_precision(ranked: Sequence[Tuple[float, bool]], n_gt: int) -> float:
    """All-point interpolated AP of a ranked (confidence, is_tp) list.

    Entries are stably re-sorted by descending confidence. With n_gt = 0
    the result is 1.0 for an empty list (vacuous) and 0.0 otherwise.
    """
    require(n_gt >= 0, f"n_gt must be >= 0, got {n_gt}")
    entries = sorted(ranked, key=lambda e: -e[0])
    if n_gt == 0:
        return 1.0 if not entries else 0.0
    if not entries:
        return 0.0

    hits = np.array([bool(tp) for _, tp in entries], dtype=np.float64)
    tp = np.cumsum(hits)
    fp = np.cumsum(1.0 - hits)
    recall = tp / n_gt
    precision = tp / (tp + fp)

    mrec = np.concatenate(([0.0], recall, [1.0]))
    mpre = np.concatenate(([0.0], precision, [0.0]))
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    i = np.flatnonzero(mrec[1:] != mrec[:-1])
    return float(np.sum((mrec[i + 1] - mrec[i]) * mpre[i + 1]))


def ap_from_match(match: MatchResult, confidences: Mapping[Hashable, float], n_gt: int) -> float:
    """AP of a matching: matched predictions are TPs, ranked by (-confidence, id)."""
    matched = match.matched_preds
    ranked = [(confidences[k], k in matched) for k in _ranked_ids(confidences)]
    return average_precision(ranked, n_gt)


def _mean_ap(values: Iterable[float]) -> float:
    values = list(values)
    return float(np.mean(values)) if values else 1.0


def _centerline_map(preds, gts, kernel: DistanceKernel, thresholds: Sequence[float],
                    n_samples: int) -> Dict[float, float]:
    pred_ids, gt_ids, dist = centerline_distances(preds, gts, kernel, n_samples)
    confidences = {k: c.confidence for k, c in preds.items()}
    return {t: ap_from_match(_greedy_assign(pred_ids, gt_ids, dist, dist < t), confidences, len(gts))
            for t in thresholds}


def det_l(preds: Mapping[Hashable, Centerline], gts: Mapping[Hashable, Centerline],
          thresholds: Sequence[float] = FRECHET_THRESHOLDS,
          n_samples: int = DEFAULT_CHAMFER_SAMPLES) -> float:
    """Mean Frechet-matched AP over the distance thresholds."""
    return _mean_ap(_centerline_map(preds, gts, DistanceKernel.FRECHET, thresholds, n_samples).values())


def det_l_ch(preds: Mapping[Hashable, Centerline], gts: Mapping[Hashable, Centerline],
             thresholds: Sequence[float] = CHAMFER_THRESHOLDS,
             n_samples: int = DEFAULT_CHAMFER_SAMPLES) -> float:
    """Mean Chamfer-matched AP over the distance thresholds."""
    return _mean_ap(_centerline_map(preds, gts, DistanceKernel.CHAMFER, thresholds, n_samples).values())


def match_traffic_elements(preds: Mapping[Hashable, TrafficElement], gts: Mapping[Hashable, TrafficElement],
                           iou_threshold: float = TE_IOU_THRESHOLD) -> Dict[int, MatchResult]:
    """Per-attribute greedy matching at IoU >= iou_threshold."""
    results = {}
    for attribute in sorted({e.attribute for e in preds.values()} | {e.attribute for e in gts.values()}):
        cls_preds = {k: e.confidence for k, e in preds.items() if e.attribute == attribute}
        pred_ids = _ranked_ids(cls_preds)
        gt_ids = sorted(k for k, e in gts.items() if e.attribute == attribute)
        iou = np.array([[box_iou(preds[p], gts[g]) for g in gt_ids] for p in pred_ids],
                       dtype=np.float64).reshape(len(pred_ids), len(gt_ids))
        results[attribute] = _greedy_assign(pred_ids, gt_ids, 1.0 - iou, iou >= iou_threshold)
    return results


def _det_t_from_matches(matches: Mapping[int, MatchResult], preds: Mapping[Hashable, TrafficElement],
                        gts: Mapping[Hashable, TrafficElement]) -> float:
    gt_classes = sorted({e.attribute for e in gts.values()})
    if not gt_classes:
        return 1.0 if not preds else 0.0
    scores = []
    for attribute in gt_classes:
        confidences = {k: e.confidence for k, e in preds.items() if e.attribute == attribute}
        n_gt = sum(1 for e in gts.values() if e.attribute == attribute)
        scores.append(ap_from_match(matches.get(attribute, MatchResult()), confidences, n_gt))
    return float(np.mean(scores))


def det_t(preds: Mapping[Hashable, TrafficElement], gts: Mapping[Hashable, TrafficElement],
          iou_threshold: float = TE_IOU_THRESHOLD) -> float:
    """Traffic element mAP averaged over the attribute classes present in GT."""
    return _det_t_from_matches(match_traffic_elements(preds, gts, iou_threshold), preds, gts)


def top_score(pred_edges: TopologyEdges, gt_edges: Iterable[Tuple[Hashable, Hashable]],
              source_match: MatchResult, target_match: Optional[MatchResult] = None) -> float:
    """Vertex-centric topology mAP.

    Every GT source vertex with at least one GT neighbour contributes the AP
    of its matched prediction's outgoing edges, ranked by score; an edge is
    a TP when its target's matched GT is a GT neighbour. Unmatched vertices
    contribute 0. Lane-lane scores pass one match for both ends. Without any
    GT edge the score is vacuous and predicted edges are not scored.
    """
    target_match = source_match if target_match is None else target_match
    neighbours: Dict[Hashable, set] = {}
    for source, target in gt_edges:
        neighbours.setdefault(source, set()).add(target)

    if not neighbours:
        return 1.0

    gt_to_pred = source_match.gt_to_pred
    target_gt = target_match.pred_to_gt
    outgoing: Dict[Hashable, List[Tuple[Hashable, float]]] = {}
    for source, target, score in pred_edges:
        outgoing.setdefault(source, []).append((target, score))

    per_vertex = []
    for vertex in sorted(neighbours):
        gt_nbrs = neighbours[vertex]
        pred = gt_to_pred.get(vertex)
        if pred is None:
            per_vertex.append(0.0)
            continue
        ranked = sorted(outgoing.get(pred, []), key=lambda e: (-e[1], e[0]))
        entries = [(score, target_gt.get(t) in gt_nbrs) for t, score in ranked]
        per_vertex.append(average_precision(entries, len(gt_nbrs)))
    return float(np.mean(per_vertex))


def manipulate_scores(edges: TopologyEdges) -> TopologyEdges:
    """Apply s + 1.0 * [s > 0.05] to every edge score."""
    return TopologyEdges(
        ((s, t, v + MANIPULATION_BOOST if v > MANIPULATION_THRESHOLD else v) for s, t, v in edges),
        bounded=False)


def ols(det_l: float, det_t: float, top_ll: float, top_lt: float) -> float:
    """OLS = (DET_l + DET_t + sqrt(TOP_ll) + sqrt(TOP_lt)) / 4."""
    for name, value in (("det_l", det_l), ("det_t", det_t), ("top_ll", top_ll), ("top_lt", top_lt)):
        if not 0.0 <= value <= 1.0:
            raise ContractViolation(f"{name} must be in [0, 1], got {value}")
    return 0.25 * (det_l + det_t + math.sqrt(top_ll) + math.sqrt(top_lt))


@dataclass(frozen=True)
class EvalOptions:
    """Relation score handling of an evaluation run."""

    score_threshold: Optional[float] = None
    manipulate: bool = False
    metric: MetricConfig = field(default_factory=MetricConfig)

    def __post_init__(self):
        if self.score_threshold is not None and not 0.0 <= self.score_threshold <= 1.0:
            raise ConfigurationError(f"score_threshold must be in [0, 1], got {self.score_threshold}")

    def prepare_edges(self, edges: TopologyEdges) -> TopologyEdges:
        """Manipulate first, then drop edges at or below the threshold."""
        if self.manipulate:
            edges = manipulate_scores(edges)
        if self.score_threshold is not None:
            edges = edges.above(self.score_threshold)
        return edges


REPORT_FIELDS = ("det_l", "det_l_ch", "det_t", "top_ll", "top_lt", "ols")


@dataclass(frozen=True)
class EvalReport:
    """Dataset-level scores in [0, 1]."""

    det_l: float
    det_l_ch: float
    det_t: float
    top_ll: float
    top_lt: float
    ols: float
    frames: int = 0
    det_l_per_threshold: Dict[float, float] = field(default_factory=dict)
    det_l_ch_per_threshold: Dict[float, float] = field(default_factory=dict)

    def rendered(self) -> Dict[str, float]:
        """Scores x100 with one decimal, as printed in result tables."""
        return {name: round(100.0 * getattr(self, name), 1) for name in REPORT_FIELDS}

    def to_dict(self) -> Dict[str, object]:
        data = {name: getattr(self, name) for name in REPORT_FIELDS}
        data['frames'] = self.frames
        data['rendered'] = self.rendered()
        data['det_l_per_threshold'] = {f"{t:g}": v for t, v in self.det_l_per_threshold.items()}
        data['det_l_ch_per_threshold'] = {f"{t:g}": v for t, v in self.det_l_ch_per_threshold.items()}
        return data

    def format_table(self) -> str:
        rendered = self.rendered()
        header = " | ".join(f"{name.upper():>8}" for name in REPORT_FIELDS)
        values = " | ".join(f"{rendered[name]:>8.1f}" for name in REPORT_FIELDS)
        lines = [header, "-" * len(header), values, f"({self.frames} frames)"]
        return "\n".join(lines)


def _tag_id(frame_id: str, key: Hashable) -> Tuple[str, Hashable]:
    return frame_id, key


def _tagged(frame_id: str, mapping: Mapping) -> Dict[Tuple[str, Hashable], object]:
    return {(frame_id, k): v for k, v in mapping.items()}


def evaluate(scenes: Sequence, options: EvalOptions = EvalOptions()) -> EvalReport:
    """Score a set of scenes.

    Matching runs per frame; TPs, FPs and GT counts are pooled over frames
    before AP integration. Ids are tagged with their frame id so they stay
    unique in the pooled rankings.

    Raises:
        SceneFormatError: no scenes, or a scene with dangling edge ids
    """
    scenes = list(scenes)
    if not scenes:
        raise SceneFormatError("No scenes to evaluate", ErrorKind.SCHEMA_VIOLATION)
    metric = options.metric

    pred_cls, gt_cls, pred_te, gt_te = {}, {}, {}, {}
    frechet = {t: [] for t in metric.frechet_thresholds}
    chamfer_m = {t: [] for t in metric.chamfer_thresholds}
    top_matches, te_matches = [], {}
    pred_ll, gt_ll, pred_lt, gt_lt = [], [], [], []

    for scene in scenes:
        scene.validate()
        fid = scene.frame_id
        preds = _tagged(fid, scene.pred_centerlines)
        gts = _tagged(fid, scene.gt_centerlines)
        pred_cls.update(preds)
        gt_cls.update(gts)

        pred_ids, gt_ids, dist = centerline_distances(preds, gts, DistanceKernel.FRECHET, metric.n_samples)
        for t in metric.frechet_thresholds:
            frechet[t].append(_greedy_assign(pred_ids, gt_ids, dist, dist < t))
        top_matches.append(_greedy_assign(pred_ids, gt_ids, dist, dist < metric.top_frechet_threshold))

        pred_ids, gt_ids, dist = centerline_distances(preds, gts, DistanceKernel.CHAMFER, metric.n_samples)
        for t in metric.chamfer_thresholds:
            chamfer_m[t].append(_greedy_assign(pred_ids, gt_ids, dist, dist < t))

        scene_pred_te = _tagged(fid, scene.pred_traffic_elements)
        scene_gt_te = _tagged(fid, scene.gt_traffic_elements)
        pred_te.update(scene_pred_te)
        gt_te.update(scene_gt_te)
        for attribute, m in match_traffic_elements(scene_pred_te, scene_gt_te, metric.iou_threshold).items():
            te_matches.setdefault(attribute, []).append(m)

        tag = partial(_tag_id, fid)
        pred_ll.extend(options.prepare_edges(scene.pred_topology_ll).relabeled(tag, tag))
        pred_lt.extend(options.prepare_edges(scene.pred_topology_lt).relabeled(tag, tag))
        gt_ll.extend((tag(s), tag(t)) for s, t in scene.gt_topology_ll)
        gt_lt.extend((tag(s), tag(t)) for s, t in scene.gt_topology_lt)

    confidences = {k: c.confidence for k, c in pred_cls.items()}
    det_l_aps = {t: ap_from_match(MatchResult.merge(ms), confidences, len(gt_cls)) for t, ms in frechet.items()}
    det_l_ch_aps = {t: ap_from_match(MatchResult.merge(ms), confidences, len(gt_cls))
                    for t, ms in chamfer_m.items()}
    merged_te = {a: MatchResult.merge(ms) for a, ms in te_matches.items()}
    det_t_score = _det_t_from_matches(merged_te, pred_te, gt_te)

    lane_match = MatchResult.merge(top_matches)
    te_match = MatchResult.merge(merged_te.values())
    top_ll = top_score(TopologyEdges(pred_ll, bounded=False), gt_ll, lane_match)
    top_lt = top_score(TopologyEdges(pred_lt, bounded=False), gt_lt, lane_match, te_match)

    det_l_score = _mean_ap(det_l_aps.values())
    report = EvalReport(
        det_l=det_l_score,
        det_l_ch=_mean_ap(det_l_ch_aps.values()),
        det_t=det_t_score,
        top_ll=top_ll,
        top_lt=top_lt,
        ols=ols(det_l_score, det_t_score, top_ll, top_lt),
        frames=len(scenes),
        det_l_per_threshold=det_l_aps,
        det_l_ch_per_threshold=det_l_ch_aps,
    )
    logger.info("Evaluated %d frames: OLS %.1f", len(scenes), 100.0 * report.ols)
    EventPublisher.publish_event(PipelineEventType.EVALUATION_FINISHED, report.to_dict())
    return report
