#!/usr/bin/env python3
"""
Pipeline manager
Coordinates the command-level operations (decode, fuse, rasterize,
simulate, evaluate, benchmark, render) over the services registered in
the container, and keeps a record of dropped instances.

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
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from bev_geometry import DEFAULT_GRID, BevGridSpec, Centerline, CenterlineSource
from bezier_fusion import DEFAULT_FUSION_POINTS, BezierCurve, ConfidenceMode, fuse_instance
from dependency_injection import ServiceProvider
from event_system import EventBus, EventPublisher, PipelineEventType
from kit_errors import ContractViolation, ErrorKind, KitError, SceneFormatError
from mask_decoder import DecoderConfig, decode_masks
from mask_rasterizer import DEFAULT_WIDTH_CELLS, FlowAwareMask, ProbMap, rasterize_centerline
from quad_direction import QuadDirection
from scene_io import SceneParser, load_scene, load_scenes, pair_scenes, save_scenes
from scene_simulator import PerturbConfig, SimulationConfig, generate_dataset, perturb_predictions
from tensor_io import load_tensor, save_tensor
from topology_metrics import EvalOptions, EvalReport, evaluate
from voxel_pool import HEIGHT_BIN_TABLE, BenchRow, HeightBinConfig, bench_pool

logger = logging.getLogger(__name__)


class PipelineManager:
    """Runs pipeline commands against the registered services."""

    def __init__(self):
        self.grid: BevGridSpec = DEFAULT_GRID
        self.decoder_config = DecoderConfig()
        self.eval_options = EvalOptions()
        self.event_bus: Optional[EventBus] = None
        self.decode_failures: List[Dict[str, Any]] = []
        self.loaded_frames: List[str] = []
        self.last_evaluation: Optional[Dict[str, Any]] = None

    def initialize_services(self):
        """Pull configuration from the container and attach the event bus."""
        self.grid = ServiceProvider.get_service("grid")
        self.decoder_config = ServiceProvider.get_service("decoder_config")
        self.eval_options = ServiceProvider.get_service("eval_options")
        settings = ServiceProvider.get_service("settings")
        threads = settings.apply_thread_limit()
        logger.debug("Pipeline running with %d numba threads", threads)

        self.event_bus = ServiceProvider.get_service("event_bus")
        EventPublisher.set_event_bus(self.event_bus)
        self._setup_event_listeners()

    def _setup_event_listeners(self):
        self.event_bus.decode_failed.connect(self._on_decode_failed)
        self.event_bus.scene_loaded.connect(self._on_scene_loaded)
        self.event_bus.evaluation_finished.connect(self._on_evaluation_finished)

    def _on_decode_failed(self, data):
        self.decode_failures.append(dict(data))

    def _on_scene_loaded(self, data):
        self.loaded_frames.append(data['frame_id'])

    def _on_evaluation_finished(self, data):
        self.last_evaluation = dict(data)
        logger.info("Evaluated %d frames, OLS %.3f", data['frames'], data['ols'])

    def shutdown(self):
        if self.event_bus is not None:
            self.event_bus.decode_failed.disconnect(self._on_decode_failed)
            self.event_bus.scene_loaded.disconnect(self._on_scene_loaded)
            self.event_bus.evaluation_finished.disconnect(self._on_evaluation_finished)
            self.event_bus = None
        EventPublisher.set_event_bus(None)

    def _mask_grid(self, shape) -> BevGridSpec:
        if tuple(shape) == self.grid.shape:
            return self.grid
        raise ContractViolation(f"Mask shape {tuple(shape)} does not match the {self.grid.rows}x{self.grid.cols} grid")

    def extract(self, mask_path, direction: str, confidence: float = 1.0) -> Centerline:
        """Decode one mask tensor into a centerline."""
        values = load_tensor(mask_path)
        if values.ndim != 2:
            raise ContractViolation(f"Mask tensor must be 2-D, got shape {values.shape}")
        mask = FlowAwareMask(ProbMap(self._mask_grid(values.shape), values),
                             QuadDirection.parse(direction), confidence)
        decoded, failures = decode_masks({Path(mask_path).stem: mask}, self.decoder_config)
        if failures:
            raise next(iter(failures.values()))
        return next(iter(decoded.values()))

    def fuse(self, mask_line, bezier, n_out: int = DEFAULT_FUSION_POINTS,
             confidence_mode: ConfidenceMode = ConfidenceMode.MASK) -> Centerline:
        """Fuse a decoded mask centerline with the Bezier head output.

        `bezier` is either {"control_points": [...4 points], "confidence": c}
        or a centerline object with "points".
        """
        mask_cl = SceneParser().parse_centerline(mask_line, "", CenterlineSource.MASK)
        if isinstance(bezier, dict) and "control_points" in bezier:
            try:
                curve = BezierCurve(bezier["control_points"], float(bezier.get("confidence", 1.0)))
            except (KitError, TypeError, ValueError) as e:
                raise SceneFormatError(str(e), ErrorKind.SCHEMA_VIOLATION, "/control_points")
        else:
            curve = SceneParser().parse_centerline(bezier, "", CenterlineSource.BEZIER)
        return fuse_instance(mask_cl, curve, n_out, confidence_mode)

    def rasterize(self, line, out_path, width_cells: float = DEFAULT_WIDTH_CELLS) -> ProbMap:
        """Rasterize a centerline object and save the mask tensor."""
        cl = SceneParser().parse_centerline(line)
        prob = rasterize_centerline(cl.polyline, self.grid, width_cells)
        if prob.out_of_grid:
            logger.warning("Centerline lies entirely outside the grid; writing an empty mask")
        save_tensor(out_path, prob.values)
        EventPublisher.publish_event(PipelineEventType.MASK_RASTERIZED, {
            'path': str(out_path),
            'cells': int(prob.values.sum()),
        })
        return prob

    def simulate(self, cfg: SimulationConfig, out_dir, perturb: Optional[PerturbConfig] = None) -> List[Path]:
        scenes = generate_dataset(cfg)
        if perturb is not None:
            scenes = [perturb_predictions(s, perturb) for s in scenes]
        return save_scenes(out_dir, scenes)

    def evaluate(self, gt_dir, pred_dir, options: Optional[EvalOptions] = None) -> EvalReport:
        gt_scenes = load_scenes(gt_dir)
        pred_scenes = gt_scenes if Path(pred_dir).resolve() == Path(gt_dir).resolve() else load_scenes(pred_dir)
        if not gt_scenes:
            raise SceneFormatError(f"No scene files in {gt_dir}", ErrorKind.SCHEMA_VIOLATION)
        return evaluate(pair_scenes(gt_scenes, pred_scenes), options or self.eval_options)

    def pool_bench(self, configs: Sequence[HeightBinConfig] = HEIGHT_BIN_TABLE, n_points: int = 1_000_000,
                   channels: int = 4, seed: int = 0, impls: Sequence[str] = ('naive', 'fast')) -> List[BenchRow]:
        return bench_pool(configs, n_points, channels, seed, self.grid, impls)

    def render(self, scene_path, out_path) -> Path:
        from scene_painter import render_scene_svg

        return render_scene_svg(load_scene(scene_path), out_path, self.grid)
