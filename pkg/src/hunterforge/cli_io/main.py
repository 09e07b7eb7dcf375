from __future__ import annotations
from typing import List, Optional
import argparse
import logging
import sys

from hunterforge.tools.errors import HunterForgeError
from hunterforge.cli_io.config import PipelineConfig
from hunterforge.cli_io import commands

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON pipeline config; preset defaults when omitted")
    common.add_argument("--seed", type=int, help="master seed, overrides the config")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--manifest", help="dataset manifest, overrides the config")

    parser = argparse.ArgumentParser(
        prog="hunter-forge",
        description="Synthetic human LiDAR scenes, supervision rasters, pseudo-label filtering and evaluation",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("segment-ground", parents=[common], help="ground files and vacant-ground masks per frame")

    p = sub.add_parser("forge", parents=[common], help="generate a synthetic corpus")
    p.add_argument("--n-frames", type=int, default=20)
    p.add_argument("--ground-dir", help="directory of precomputed ground files")

    p = sub.add_parser("filter", parents=[common], help="bi-directional pseudo-label filter")
    p.add_argument("detections", help="detections JSON-lines file")

    p = sub.add_parser("update-mask", parents=[common], help="receptive-field mask update")
    p.add_argument("masks", help="directory of <frame id>.M.bin masks")
    p.add_argument("pseudo_labels", help="pseudo-label JSON-lines file")

    p = sub.add_parser("eval", parents=[common], help="center-distance AP, precision and recall")
    p.add_argument("detections", help="detections JSON-lines file")
    p.add_argument("--gt", help="ground truth JSON-lines file; manifest labels when omitted")

    p = sub.add_parser("losscheck", parents=[common], help="loss values and gradients of serialized inputs")
    p.add_argument("tensors", help=".npz file with the loss inputs")

    p = sub.add_parser("convert-xyz", parents=[common], help="ASCII xyz to packed float cloud")
    p.add_argument("src")

    sub.add_parser("toy", parents=[common], help="write the procedural toy dataset")

    p = sub.add_parser("pipeline", parents=[common], help="segment-ground, forge, filter, update-mask and eval")
    p.add_argument("--n-frames", type=int, default=20)
    p.add_argument("--detections", help="detections file; detections.jsonl next to the manifest by default")
    return parser


def _config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.manifest:
        cfg.manifest = args.manifest
    return cfg


def run(args) -> commands.CommandResult:
    cfg = _config(args)
    out = args.out
    if args.command == "segment-ground":
        return commands.cmd_segment_ground(cfg, out)
    if args.command == "forge":
        return commands.cmd_forge(cfg, out, args.n_frames, args.ground_dir)
    if args.command == "filter":
        return commands.cmd_filter(cfg, out, args.detections)
    if args.command == "update-mask":
        return commands.cmd_update_mask(cfg, out, args.masks, args.pseudo_labels)
    if args.command == "eval":
        result = commands.cmd_eval(cfg, out, args.detections, args.gt)
        print(result.payload)
        return result
    if args.command == "losscheck":
        return commands.cmd_losscheck(cfg, out, args.tensors)
    if args.command == "convert-xyz":
        return commands.cmd_convert_xyz(cfg, out, args.src)
    if args.command == "toy":
        return commands.cmd_toy(cfg, out)
    if args.command == "pipeline":
        return commands.cmd_pipeline(cfg, out, args.n_frames, args.detections)
    raise ValueError(f"unknown command {args.command}")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    try:
        result = run(args)
    except (HunterForgeError, ValueError, OSError, KeyError) as e:
        logger.error("%s failed: %s", args.command, e)
        return commands.EXIT_FATAL
    if result.skipped:
        logger.warning("%s finished with %d warnings", args.command, len(result.skipped))
    return result.code


if __name__ == "__main__":
    sys.exit(main())
