#!/usr/bin/env python3
"""
Scene annotation files
One JSON file per frame holding ground truth and predictions:

{
  "frame_id": "000001",
  "ground_truth": {
    "centerlines": {"<id>": {"points": [[x, y, z], ...]}},
    "topology_ll": [["<lane>", "<lane>"], ...],
    "traffic_elements": {"<id>": {"bbox": [x1, y1, x2, y2], "attribute": 3}},
    "topology_lt": [["<lane>", "<te>"], ...]
  },
  "predictions": {
    "centerlines": {"<id>": {"points": [...], "confidence": 0.9}},
    "topology_ll": [["<lane>", "<lane>", 0.8], ...],
    "traffic_elements": {"<id>": {"bbox": [...], "attribute": 3, "confidence": 0.7}},
    "topology_lt": [["<lane>", "<te>", 0.6], ...]
  }
}

Either section may be omitted. Centerlines may also carry "source"; the
writer always emits confidence and source so files read back unchanged.
Violations are reported with the JSON
pointer of the first offending value.

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

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

from bev_geometry import Centerline, CenterlineSource
from event_system import EventPublisher, PipelineEventType
from kit_errors import ErrorKind, KitError, SceneFormatError
from tensor_io import PathLike, atomic_write_bytes
from topology_metrics import TopologyEdges, TrafficElement

logger = logging.getLogger(__name__)

SCENE_SUFFIX = ".json"


@dataclass
class SceneAnnotation:
    """Ground truth and predictions of one frame."""

    frame_id: str
    gt_centerlines: Dict[str, Centerline] = field(default_factory=dict)
    gt_topology_ll: List[Tuple[str, str]] = field(default_factory=list)
    gt_traffic_elements: Dict[str, TrafficElement] = field(default_factory=dict)
    gt_topology_lt: List[Tuple[str, str]] = field(default_factory=list)
    pred_centerlines: Dict[str, Centerline] = field(default_factory=dict)
    pred_topology_ll: TopologyEdges = field(default_factory=TopologyEdges)
    pred_traffic_elements: Dict[str, TrafficElement] = field(default_factory=dict)
    pred_topology_lt: TopologyEdges = field(default_factory=TopologyEdges)

    def _edge_checks(self):
        yield "/ground_truth/topology_ll", [(s, t) for s, t in self.gt_topology_ll], \
            self.gt_centerlines, self.gt_centerlines
        yield "/ground_truth/topology_lt", [(s, t) for s, t in self.gt_topology_lt], \
            self.gt_centerlines, self.gt_traffic_elements
        yield "/predictions/topology_ll", [(s, t) for s, t, _ in self.pred_topology_ll], \
            self.pred_centerlines, self.pred_centerlines
        yield "/predictions/topology_lt", [(s, t) for s, t, _ in self.pred_topology_lt], \
            self.pred_centerlines, self.pred_traffic_elements

    def is_valid(self) -> Tuple[bool, str]:
        """Check that every edge endpoint names an existing instance.

        Returns:
            Tuple of (is_valid, error_message)
        """
        try:
            self.validate()
        except SceneFormatError as e:
            return False, str(e)
        return True, ""

    def validate(self):
        """Raise SceneFormatError (DANGLING_ID) on the first dangling edge."""
        for pointer, edges, sources, targets in self._edge_checks():
            seen = set()
            for i, (source, target) in enumerate(edges):
                if source not in sources or target not in targets:
                    missing = source if source not in sources else target
                    raise SceneFormatError(f"Edge {source} -> {target} references missing id {missing!r}",
                                           ErrorKind.DANGLING_ID, f"{pointer}/{i}", self.frame_id)
                if (source, target) in seen:
                    raise SceneFormatError(f"Duplicate edge {source} -> {target}",
                                           ErrorKind.SCHEMA_VIOLATION, f"{pointer}/{i}", self.frame_id)
                seen.add((source, target))

    def __eq__(self, other):
        if not isinstance(other, SceneAnnotation):
            return NotImplemented
        return (self.frame_id == other.frame_id
                and self.gt_centerlines == other.gt_centerlines
                and [tuple(e) for e in self.gt_topology_ll] == [tuple(e) for e in other.gt_topology_ll]
                and self.gt_traffic_elements == other.gt_traffic_elements
                and [tuple(e) for e in self.gt_topology_lt] == [tuple(e) for e in other.gt_topology_lt]
                and self.pred_centerlines == other.pred_centerlines
                and self.pred_topology_ll == other.pred_topology_ll
                and self.pred_traffic_elements == other.pred_traffic_elements
                and self.pred_topology_lt == other.pred_topology_lt)

    __hash__ = None


def _escape(token) -> str:
    return str(token).replace("~", "~0").replace("/", "~1")


class SceneParser:
    """JSON-to-scene decoder with pointer-level error reporting."""

    def __init__(self, frame_id: str = ""):
        self.frame_id = frame_id

    def _fail(self, pointer: str, message: str, kind: ErrorKind = ErrorKind.SCHEMA_VIOLATION):
        raise SceneFormatError(message, kind, pointer, self.frame_id)

    def _object(self, value, pointer: str) -> Dict[str, Any]:
        if not isinstance(value, dict):
            self._fail(pointer, f"Expected an object, got {type(value).__name__}")
        return value

    def _list(self, value, pointer: str) -> list:
        if not isinstance(value, list):
            self._fail(pointer, f"Expected an array, got {type(value).__name__}")
        return value

    def _number(self, value, pointer: str) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            self._fail(pointer, f"Expected a finite number, got {value!r}")
        return float(value)

    def _unit(self, value, pointer: str) -> float:
        value = self._number(value, pointer)
        if not 0.0 <= value <= 1.0:
            self._fail(pointer, f"Value {value} outside [0, 1]")
        return value

    def _id(self, value, pointer: str) -> str:
        if not isinstance(value, str) or not value:
            self._fail(pointer, f"Expected a non-empty string id, got {value!r}")
        return value

    def parse_string(self, text: str) -> SceneAnnotation:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise SceneFormatError(f"Malformed JSON: {e}", ErrorKind.MALFORMED_JSON, "", self.frame_id)
        return self.parse_object(data)

    def parse_object(self, data) -> SceneAnnotation:
        data = self._object(data, "")
        if "frame_id" not in data:
            self._fail("/frame_id", "Missing frame_id")
        self.frame_id = self._id(data["frame_id"], "/frame_id")
        unknown = set(data) - {"frame_id", "ground_truth", "predictions"}
        if unknown:
            self._fail(f"/{_escape(sorted(unknown)[0])}", "Unknown top-level field")

        gt = self._section(data.get("ground_truth", {}), "/ground_truth", scored=False)
        pred = self._section(data.get("predictions", {}), "/predictions", scored=True)
        scene = SceneAnnotation(
            frame_id=self.frame_id,
            gt_centerlines=gt["centerlines"],
            gt_topology_ll=gt["topology_ll"],
            gt_traffic_elements=gt["traffic_elements"],
            gt_topology_lt=gt["topology_lt"],
            pred_centerlines=pred["centerlines"],
            pred_topology_ll=pred["topology_ll"],
            pred_traffic_elements=pred["traffic_elements"],
            pred_topology_lt=pred["topology_lt"],
        )
        scene.validate()
        return scene

    def _section(self, value, pointer: str, scored: bool) -> Dict[str, Any]:
        value = self._object(value, pointer)
        unknown = set(value) - {"centerlines", "topology_ll", "traffic_elements", "topology_lt"}
        if unknown:
            self._fail(f"{pointer}/{_escape(sorted(unknown)[0])}", "Unknown field")
        source = CenterlineSource.MASK if scored else CenterlineSource.GROUND_TRUTH
        return {
            "centerlines": {
                key: self.parse_centerline(item, f"{pointer}/centerlines/{_escape(key)}", source)
                for key, item in self._object(value.get("centerlines", {}), f"{pointer}/centerlines").items()
            },
            "traffic_elements": {
                key: self._traffic_element(item, f"{pointer}/traffic_elements/{_escape(key)}")
                for key, item in self._object(value.get("traffic_elements", {}),
                                              f"{pointer}/traffic_elements").items()
            },
            "topology_ll": self._edges(value.get("topology_ll", []), f"{pointer}/topology_ll", scored),
            "topology_lt": self._edges(value.get("topology_lt", []), f"{pointer}/topology_lt", scored),
        }

    def parse_centerline(self, value, pointer: str = "",
                         default_source: CenterlineSource = CenterlineSource.GROUND_TRUTH) -> Centerline:
        value = self._object(value, pointer)
        points = self._list(value.get("points"), f"{pointer}/points")
        coords = []
        for i, p in enumerate(points):
            p = self._list(p, f"{pointer}/points/{i}")
            if len(p) not in (2, 3):
                self._fail(f"{pointer}/points/{i}", f"Point must have 2 or 3 coordinates, got {len(p)}")
            coords.append([self._number(v, f"{pointer}/points/{i}/{k}") for k, v in enumerate(p)])
        confidence = self._unit(value.get("confidence", 1.0), f"{pointer}/confidence")
        try:
            source = CenterlineSource(value.get("source", default_source.value))
        except ValueError:
            self._fail(f"{pointer}/source", f"Unknown centerline source {value.get('source')!r}")
        try:
            return Centerline(coords, confidence, source)
        except KitError as e:
            self._fail(f"{pointer}/points", str(e))

    def _traffic_element(self, value, pointer: str) -> TrafficElement:
        value = self._object(value, pointer)
        bbox = self._list(value.get("bbox"), f"{pointer}/bbox")
        if len(bbox) != 4:
            self._fail(f"{pointer}/bbox", f"bbox must have 4 numbers, got {len(bbox)}")
        bbox = tuple(self._number(v, f"{pointer}/bbox/{k}") for k, v in enumerate(bbox))
        attribute = value.get("attribute")
        if isinstance(attribute, bool) or not isinstance(attribute, int):
            self._fail(f"{pointer}/attribute", f"Expected an integer attribute, got {attribute!r}")
        confidence = self._unit(value.get("confidence", 1.0), f"{pointer}/confidence")
        try:
            return TrafficElement(bbox, attribute, confidence)
        except KitError as e:
            self._fail(pointer, str(e))

    def _edges(self, value, pointer: str, scored: bool):
        rows = self._list(value, pointer)
        width = 3 if scored else 2
        edges, seen = [], set()
        for i, row in enumerate(rows):
            row = self._list(row, f"{pointer}/{i}")
            if len(row) != width:
                self._fail(f"{pointer}/{i}", f"Edge must have {width} entries, got {len(row)}")
            source = self._id(row[0], f"{pointer}/{i}/0")
            target = self._id(row[1], f"{pointer}/{i}/1")
            if (source, target) in seen:
                self._fail(f"{pointer}/{i}", f"Duplicate edge {source} -> {target}")
            seen.add((source, target))
            if scored:
                edges.append((source, target, self._unit(row[2], f"{pointer}/{i}/2")))
            else:
                edges.append((source, target))
        return TopologyEdges(edges) if scored else edges


def centerline_to_json(cl: Centerline) -> Dict[str, Any]:
    return {"points": cl.polyline.tolist(), "confidence": cl.confidence, "source": cl.source.value}


def centerline_from_json(data) -> Centerline:
    return SceneParser().parse_centerline(data)


def _te_to_json(te: TrafficElement) -> Dict[str, Any]:
    return {"bbox": list(te.bbox), "attribute": te.attribute, "confidence": te.confidence}


def scene_to_json(scene: SceneAnnotation) -> Dict[str, Any]:
    return {
        "frame_id": scene.frame_id,
        "ground_truth": {
            "centerlines": {k: centerline_to_json(c) for k, c in scene.gt_centerlines.items()},
            "topology_ll": [[s, t] for s, t in scene.gt_topology_ll],
            "traffic_elements": {k: _te_to_json(e) for k, e in scene.gt_traffic_elements.items()},
            "topology_lt": [[s, t] for s, t in scene.gt_topology_lt],
        },
        "predictions": {
            "centerlines": {k: centerline_to_json(c) for k, c in scene.pred_centerlines.items()},
            "topology_ll": [[s, t, v] for s, t, v in scene.pred_topology_ll],
            "traffic_elements": {k: _te_to_json(e) for k, e in scene.pred_traffic_elements.items()},
            "topology_lt": [[s, t, v] for s, t, v in scene.pred_topology_lt],
        },
    }


def dump_json(path: PathLike, data):
    atomic_write_bytes(path, (json.dumps(data, indent=2) + "\n").encode("utf-8"))


def _read_text(path: PathLike, frame_id: str = "") -> str:
    with open(path, "rb") as f:
        raw = f.read()
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise SceneFormatError(f"{path} is not UTF-8 text: {e}", ErrorKind.MALFORMED_JSON, "", frame_id)


def read_json(path: PathLike):
    text = _read_text(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SceneFormatError(f"Malformed JSON in {path}: {e}", ErrorKind.MALFORMED_JSON)


def save_scene(path: PathLike, scene: SceneAnnotation):
    scene.validate()
    dump_json(path, scene_to_json(scene))
    logger.info("Saved frame %s to %s", scene.frame_id, path)
    EventPublisher.publish_event(PipelineEventType.SCENE_SAVED, {
        'frame_id': scene.frame_id,
        'path': str(path),
    })


def load_scene(path: PathLike) -> SceneAnnotation:
    frame_id = Path(path).stem
    scene = SceneParser(frame_id).parse_string(_read_text(path, frame_id))
    logger.info("Loaded frame %s from %s (%d GT lanes, %d predicted lanes)",
                scene.frame_id, path, len(scene.gt_centerlines), len(scene.pred_centerlines))
    EventPublisher.publish_event(PipelineEventType.SCENE_LOADED, {
        'frame_id': scene.frame_id,
        'path': str(path),
        'gt_lanes': len(scene.gt_centerlines),
        'pred_lanes': len(scene.pred_centerlines),
    })
    return scene


def save_scenes(directory: PathLike, scenes: Sequence[SceneAnnotation]) -> List[Path]:
    """One file per frame, named after the frame id."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for scene in scenes:
        path = directory / f"{scene.frame_id}{SCENE_SUFFIX}"
        save_scene(path, scene)
        paths.append(path)
    return paths


def load_scenes(directory: PathLike) -> List[SceneAnnotation]:
    """All scene files of a directory, in file name order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"Scene directory not found: {directory}")
    return [load_scene(p) for p in sorted(directory.glob(f"*{SCENE_SUFFIX}"))]


def pair_scenes(gt_scenes: Sequence[SceneAnnotation],
                pred_scenes: Sequence[SceneAnnotation]) -> List[SceneAnnotation]:
    """Combine ground truth and prediction files by frame id.

    GT frames without a prediction file are scored with empty predictions.

    Raises:
        SceneFormatError: a prediction frame has no ground truth
    """
    preds = {s.frame_id: s for s in pred_scenes}
    gt_ids = {s.frame_id for s in gt_scenes}
    orphans = sorted(set(preds) - gt_ids)
    if orphans:
        raise SceneFormatError("Prediction frame has no ground truth", ErrorKind.SCHEMA_VIOLATION,
                               "/frame_id", orphans[0])
    paired = []
    for gt in gt_scenes:
        pred = preds.get(gt.frame_id)
        if pred is None:
            logger.warning("No predictions for frame %s; scoring it as empty", gt.frame_id)
            pred = SceneAnnotation(gt.frame_id)
        scene = SceneAnnotation(
            frame_id=gt.frame_id,
            gt_centerlines=gt.gt_centerlines,
            gt_topology_ll=gt.gt_topology_ll,
            gt_traffic_elements=gt.gt_traffic_elements,
            gt_topology_lt=gt.gt_topology_lt,
            pred_centerlines=pred.pred_centerlines,
            pred_topology_ll=pred.pred_topology_ll,
            pred_traffic_elements=pred.pred_traffic_elements,
            pred_topology_lt=pred.pred_topology_lt,
        )
        scene.validate()
        paired.append(scene)
    return paired
