#!/usr/bin/env python3
"""
Command-line interface of the BEV topology kit

Subcommands:
    extract     decode a flow-aware mask tensor into a centerline
    fuse        fuse a mask-head centerline with a Bezier head output
    evaluate    score prediction scenes against ground truth scenes
    simulate    write synthetic scene files
    rasterize   turn a centerline into a mask tensor
    pool-bench  time voxel pooling over height-bin configurations
    render      draw a scene as SVG

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

import argparse
import json
import logging
import sys
from typing import List, Optional

from bezier_fusion import DEFAULT_FUSION_POINTS, ConfidenceMode
from dependency_injection import ServiceProvider, build_container
from kit_config import KitSettings, configure_logging
from kit_errors import ConfigurationError, KitError
from mask_decoder import DecoderConfig
from mask_rasterizer import DEFAULT_WIDTH_CELLS
from pipeline_manager import PipelineManager
from scene_io import centerline_to_json, dump_json, read_json
from scene_simulator import PerturbConfig, SimulationConfig
from topology_metrics import EvalOptions
from voxel_pool import HEIGHT_BIN_TABLE, HeightBinConfig

logger = logging.getLogger(__name__)


def _emit(data, out: Optional[str]):
    """Write JSON to a file (atomically) or stdout."""
    if out:
        dump_json(out, data)
    else:
        json.dump(data, sys.stdout, indent=2)
        sys.stdout.write("\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bev_kit", description="BEV lane topology toolkit")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug logs")
    parser.add_argument("--threads", type=int, default=None,
                        help="cap worker threads (overrides BEV_KIT_THREADS)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="decode a mask tensor into a centerline")
    p.add_argument("--mask", required=True, help="BEVT mask tensor (rows x cols)")
    p.add_argument("--direction", required=True, choices=["up", "down", "left", "right"])
    p.add_argument("--threshold", type=float, default=0.95)
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--points", type=int, default=11)
    p.add_argument("--confidence", type=float, default=1.0)
    p.add_argument("--out", help="output JSON (default: stdout)")

    p = sub.add_parser("fuse", help="fuse mask and Bezier centerlines")
    p.add_argument("--mask-line", required=True, help="mask-head centerline JSON")
    p.add_argument("--bezier", required=True, help="Bezier JSON (control_points or points)")
    p.add_argument("--points", type=int, default=DEFAULT_FUSION_POINTS)
    p.add_argument("--confidence-mode", choices=[m.value for m in ConfidenceMode], default="mask")
    p.add_argument("--out", help="output JSON (default: stdout)")

    p = sub.add_parser("evaluate", help="score predictions against ground truth")
    p.add_argument("--gt", required=True, help="directory of ground truth scene files")
    p.add_argument("--pred", required=True, help="directory of prediction scene files")
    p.add_argument("--score-threshold", type=float, default=None,
                   help="discard topology edges with score <= this value")
    p.add_argument("--manipulate", action="store_true", help="apply s + 1*[s > 0.05] to edge scores")
    p.add_argument("--out", help="report JSON (default: stdout)")

    p = sub.add_parser("simulate", help="write synthetic scenes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lanes", type=int, default=6)
    p.add_argument("--density", type=float, default=0.7, help="topology density in [0, 1]")
    p.add_argument("--traffic-elements", type=int, default=3)
    p.add_argument("--frames", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--perturb", help="PerturbConfig JSON file")

    p = sub.add_parser("rasterize", help="rasterize a centerline into a mask tensor")
    p.add_argument("--line", required=True, help="centerline JSON")
    p.add_argument("--out", required=True, help="output BEVT tensor")
    p.add_argument("--width", type=float, default=DEFAULT_WIDTH_CELLS, help="instance width in cells")

    p = sub.add_parser("pool-bench", help="benchmark voxel pooling")
    p.add_argument("--config", action="append", default=None,
                   help='height bins "(lower,upper,length)"; repeatable (default: all five table configs)')
    p.add_argument("--points", type=int, default=1_000_000)
    p.add_argument("--channels", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--impl", action="append", choices=["naive", "fast"], default=None)
    p.add_argument("--out", help="output JSON (default: stdout)")

    p = sub.add_parser("render", help="draw a scene as SVG")
    p.add_argument("--scene", required=True, help="scene JSON file")
    p.add_argument("--out", required=True, help="output SVG")
    return parser


def _settings(args) -> KitSettings:
    if args.threads is None:
        return KitSettings.from_env()
    if args.threads < 1:
        raise ConfigurationError(f"--threads must be >= 1, got {args.threads}")
    return KitSettings(max_threads=args.threads)


def run(args) -> int:
    decoder_config = None
    if args.command == "extract":
        decoder_config = DecoderConfig(threshold_p=args.threshold, poly_degree=args.degree, n_out=args.points)
    eval_options = None
    if args.command == "evaluate":
        eval_options = EvalOptions(score_threshold=args.score_threshold, manipulate=args.manipulate)

    ServiceProvider.set_container(build_container(_settings(args), decoder_config=decoder_config,
                                                  eval_options=eval_options))
    manager = PipelineManager()
    manager.initialize_services()
    try:
        return _dispatch(manager, args)
    finally:
        manager.shutdown()
        ServiceProvider.set_container(None)


def _dispatch(manager: PipelineManager, args) -> int:
    if args.command == "extract":
        cl = manager.extract(args.mask, args.direction, args.confidence)
        _emit(centerline_to_json(cl), args.out)

    elif args.command == "fuse":
        fused = manager.fuse(read_json(args.mask_line), read_json(args.bezier), args.points,
                             ConfidenceMode(args.confidence_mode))
        _emit(centerline_to_json(fused), args.out)

    elif args.command == "evaluate":
        report = manager.evaluate(args.gt, args.pred)
        print(report.format_table(), file=sys.stderr)
        _emit(report.to_dict(), args.out)

    elif args.command == "simulate":
        perturb = PerturbConfig.from_dict(read_json(args.perturb)) if args.perturb else None
        cfg = SimulationConfig(seed=args.seed, n_lanes=args.lanes, topology_density=args.density,
                               n_traffic_elements=args.traffic_elements, frames=args.frames)
        paths = manager.simulate(cfg, args.out, perturb)
        logger.info("Wrote %d scene files to %s", len(paths), args.out)

    elif args.command == "rasterize":
        manager.rasterize(read_json(args.line), args.out, args.width)

    elif args.command == "pool-bench":
        configs = [HeightBinConfig.parse(c) for c in args.config] if args.config else list(HEIGHT_BIN_TABLE)
        rows = manager.pool_bench(configs, args.points, args.channels, args.seed,
                                  args.impl or ("naive", "fast"))
        _emit([row.to_dict() for row in rows], args.out)

    elif args.command == "render":
        manager.render(args.scene, args.out)

    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    try:
        return run(args)
    except (KitError, OSError) as e:
        print(f"bev_kit {args.command}: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
