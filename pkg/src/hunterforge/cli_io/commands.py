from __future__ import annotations
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional
import logging

import numpy as np

from hunterforge.tools.errors import ManifestError
from hunterforge.tools.utils import child_generator
from hunterforge.geometry_core import read_cloud
from hunterforge.lidar_sim import HumanAsset, load_asset, humanoid_pool
from hunterforge.ground_seg import GroundModel, segment_ground
from hunterforge.scene_forge import Manifest, corpus_generate, plan_corpus, load_scene, validate_frame
from hunterforge.supervision import (
    Mask,
    vacant_ground_mask,
    compose_training_mask,
    render_heatmap,
    visible_joints,
    update_mask,
)
from hunterforge.loss_kernels import heatmap_loss, bbox_loss, total_loss, align_loss, LossResult
from hunterforge.track_filter import Detection, DetectionFrame, read_detections, write_detections, group_sequences, filter_labels
from hunterforge.eval_metrics import evaluate
from hunterforge.cli_io.config import PipelineConfig
from hunterforge.cli_io.io import write_json, content_hash, read_ground_truth, convert_xyz
from hunterforge.cli_io.pipeline import StageGraph
from hunterforge.cli_io.toy_dataset import build_toy_dataset

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2


@dataclass
class CommandResult:
    """Outcome of a command

    :param code: exit code, 0 success, 1 fatal, 2 finished with warnings
    :param outputs: written files and directories
    :param skipped: inputs that were skipped with a warning
    :param payload: command specific result, e.g. the metrics report
    """

    code: int = EXIT_OK
    outputs: List[Path] = field(default_factory=list)
    skipped: List[str] = field(default_factory=list)
    payload: object = None

    @classmethod
    def finished(cls, outputs, skipped, payload=None) -> CommandResult:
        return cls(EXIT_PARTIAL if skipped else EXIT_OK, list(outputs), list(skipped), payload)


def _meta(command: str, cfg: PipelineConfig, **extra) -> dict:
    return {"command": command, "seed": cfg.seed, "config": cfg.to_dict(), **extra}


def _manifest(cfg: PipelineConfig) -> Manifest:
    if not cfg.manifest:
        raise ManifestError("no dataset manifest configured")
    return Manifest.load(cfg.manifest)


def load_asset_pool(cfg: PipelineConfig) -> List[HumanAsset]:
    """OBJ assets of ``cfg.asset_dir`` in name order, else procedural humanoids"""
    if cfg.asset_dir:
        paths = sorted(Path(cfg.asset_dir).glob("*.obj"))
        pool = []
        for p in paths:
            try:
                pool.append(load_asset(p))
            except (OSError, ValueError, KeyError) as e:
                logger.warning("skipping asset %s: %s", p, e)
    else:
        pool = humanoid_pool(cfg.n_assets, child_generator(cfg.seed, (0,)))
    if not pool:
        raise ValueError("the asset pool is empty")
    return pool


def cmd_segment_ground(cfg: PipelineConfig, out) -> CommandResult:
    """Segment the ground of every manifest frame

    Writes ``ground/<id>.json`` and the frame's vacant-ground mask
    ``masks/<id>.M.bin``.
    """
    out = Path(out)
    manifest = _manifest(cfg)
    grid = cfg.bev_grid()
    outputs, skipped, done = [], [], []
    for record in manifest.frames():
        try:
            cloud = read_cloud(record.cloud)
        except (OSError, ValueError) as e:
            logger.warning("skipping frame %s: %s", record.id, e)
            skipped.append(record.id)
            continue
        ground = segment_ground(cloud, cfg.ransac, cfg.ransac.seed, cfg.lidar.origin)
        if ground.is_empty():
            logger.warning("no ground found in frame %s", record.id)

        path = out / "ground" / f"{record.id}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        ground.save(path)
        mask_path = out / "masks" / f"{record.id}.M.bin"
        mask_path.parent.mkdir(parents=True, exist_ok=True)
        vacant_ground_mask(cloud, grid, cfg.mask, ground).save(mask_path)
        outputs += [path, mask_path]
        done.append(record.id)

    outputs.append(write_json(out / "segment-ground.meta.json", _meta("segment-ground", cfg, frames=done, skipped=skipped)))
    logger.info("segmented %d frames, skipped %d", len(done), len(skipped))
    return CommandResult.finished(outputs, skipped)


def _ensure_ground(manifest: Manifest, cfg: PipelineConfig, n_frames: int, ground_dir: Path) -> None:
    """Segment the drawn base frames that have no ground file yet"""
    draws = plan_corpus(manifest, n_frames, cfg.insertion.seed)
    ground_dir.mkdir(parents=True, exist_ok=True)
    done = set()
    for d in draws:
        record = manifest.sequences[d.sequence].frames[d.frame]
        path = ground_dir / f"{record.id}.json"
        if record.id in done or path.exists():
            continue
        done.add(record.id)
        loaded = load_scene(record, cfg.ransac, cfg.lidar.origin)
        if loaded is not None:
            loaded[1].save(path)


def cmd_forge(cfg: PipelineConfig, out, n_frames: int, ground_dir=None) -> CommandResult:
    """Generate a synthetic corpus with its supervision rasters

    The corpus goes to ``forge-<hash>`` under ``out`` where the hash covers
    the effective config and the frame count. Per frame it holds the cloud
    and labels (``frames/``), the masks M and M* (``masks/``), the target
    heatmap (``heatmaps/``) and the joint visibility (``joints/``).

    :raises ValueError: if the asset pool is empty
    """
    out = Path(out)
    manifest = _manifest(cfg)
    pool = load_asset_pool(cfg)
    corpus = out / f"forge-{content_hash({'command': 'forge', 'config': cfg.to_dict(), 'n_frames': n_frames})}"
    for sub in ("frames", "masks", "heatmaps", "joints"):
        (corpus / sub).mkdir(parents=True, exist_ok=True)

    ground_dir = Path(ground_dir) if ground_dir is not None else corpus / "ground"
    if not manifest.is_empty():
        _ensure_ground(manifest, cfg, n_frames, ground_dir)

    grid = cfg.bev_grid()
    @lru_cache(maxsize=8)
    def ground(base: str) -> Optional[GroundModel]:
        path = ground_dir / f"{base}.json"
        return GroundModel.load(path) if path.exists() else None

    frames, problems, label_frames = [], {}, []
    stream = corpus_generate(
        manifest, n_frames, cfg.insertion, pool, cfg.lidar, cfg.ransac, cfg.insertion.seed, cfg.workers(), ground_dir
    ) if not manifest.is_empty() else iter(())
    for frame in stream:
        fid = frame.provenance.frame_id
        frame.save(corpus / "frames" / fid)

        M = vacant_ground_mask(frame.cloud, grid, cfg.mask, ground(frame.provenance.base_frame))
        y = render_heatmap(frame.boxes(), grid, cfg.mask)
        M.save(corpus / "masks" / f"{fid}.M.bin")
        compose_training_mask(M, y).save(corpus / "masks" / f"{fid}.Mstar.bin")
        y.save(corpus / "heatmaps" / f"{fid}.bin")

        joints = [
            visible_joints(label.joints, frame.instance_points(label.instance_id), cfg.mask).to_dict()
            for label in frame.labels
        ]
        write_json(corpus / "joints" / f"{fid}.json", joints)

        issues = validate_frame(frame, cfg.insertion)
        if issues:
            logger.warning("frame %s failed validation: %s", fid, "; ".join(issues))
            problems[fid] = issues
        t = len(label_frames)
        label_frames.append(DetectionFrame(fid, [Detection(t, l.box, 1.0, k) for k, l in enumerate(frame.labels)]))
        frames.append(fid)

    write_detections(corpus / "labels.jsonl", label_frames)
    skipped = [] if len(frames) == n_frames else [f"{n_frames - len(frames)} frames not produced"]
    if skipped:
        logger.warning("produced %d of %d frames", len(frames), n_frames)
    meta = _meta("forge", cfg, n_frames=n_frames, produced=len(frames), frames=frames, problems=problems)
    write_json(corpus / "meta.json", meta)
    return CommandResult.finished([corpus], skipped + sorted(problems), corpus)


def cmd_filter(cfg: PipelineConfig, out, detections) -> CommandResult:
    """Run the bi-directional filter per sequence

    Writes ``filtered.jsonl`` with every input frame in input order.
    """
    out = Path(out)
    frames = read_detections(detections)
    kept: Dict[tuple, list] = {}
    for name, group in group_sequences(frames).items():
        filtered = filter_labels([f.detections for f in group], cfg.filter)
        for t, dets in enumerate(filtered):
            kept[(name, t)] = dets

    positions: Dict[str, int] = {}
    result = []
    for f in frames:
        t = positions.get(f.sequence, 0)
        positions[f.sequence] = t + 1
        result.append(DetectionFrame(f.frame_id, kept[(f.sequence, t)], f.sequence))

    path = out / "filtered.jsonl"
    path.parent.mkdir(parents=True, exist_ok=True)
    write_detections(path, result)
    n_in = sum(len(f) for f in frames)
    n_out = sum(len(f) for f in result)
    logger.info("filter kept %d of %d detections", n_out, n_in)
    meta = write_json(out / "filter.meta.json", _meta("filter", cfg, n_frames=len(frames), n_in=n_in, n_out=n_out))
    return CommandResult.finished([path, meta], [], result)


def cmd_update_mask(cfg: PipelineConfig, out, mask_dir, pseudo_labels) -> CommandResult:
    """Apply the receptive-field update to every frame of a pseudo-label file

    Reads ``<mask_dir>/<id>.M.bin`` and writes ``masks/<id>.Mprime.bin``.
    """
    out = Path(out)
    (out / "masks").mkdir(parents=True, exist_ok=True)
    outputs, skipped = [], []
    for frame in read_detections(pseudo_labels):
        src = Path(mask_dir) / f"{frame.frame_id}.M.bin"
        try:
            M = Mask.load(src)
        except (OSError, ValueError) as e:
            logger.warning("skipping mask of frame %s: %s", frame.frame_id, e)
            skipped.append(frame.frame_id)
            continue
        dst = out / "masks" / f"{frame.frame_id}.Mprime.bin"
        update_mask(M, [d.box for d in frame.detections], cfg.mask).save(dst)
        outputs.append(dst)

    outputs.append(write_json(out / "update-mask.meta.json", _meta("update-mask", cfg, n_frames=len(outputs), skipped=skipped)))
    return CommandResult.finished(outputs, skipped)


def cmd_eval(cfg: PipelineConfig, out, detections, ground_truth=None) -> CommandResult:
    """Evaluate detections after circle NMS

    Ground truth comes from a detections-format file or, when omitted, from
    the label files of the manifest. Frames with unreadable label files are
    left out of the evaluation and reported as skipped.
    """
    out = Path(out)
    dets = read_detections(detections)
    skipped: List[str] = []
    if ground_truth is not None:
        gts = read_detections(ground_truth)
    else:
        gts = read_ground_truth(_manifest(cfg), skipped)
        dropped = set(skipped)
        dets = [f for f in dets if f.frame_id not in dropped]
    report = evaluate(dets, gts, replace(cfg.eval, apply_nms=True))
    path = write_json(out / "report.json", _meta("eval", cfg, report=report.to_dict(), skipped=skipped))
    return CommandResult.finished([path], skipped, report)


def _loss_dump(name: str, result: LossResult, values: dict, grads: dict) -> None:
    values[name] = {"value": result.value, "components": result.components}
    for key, g in result.grads.items():
        grads[f"{name}.{key}"] = g


def cmd_losscheck(cfg: PipelineConfig, out, tensors) -> CommandResult:
    """Evaluate the loss kernels on serialized inputs

    The ``.npz`` input may hold ``x``, ``y``, ``mask`` (heatmap loss),
    ``pred``, ``gt`` (box loss) and ``F_s``, ``F_r`` (alignment). Values go to
    ``losscheck.json`` and gradients to ``losscheck_grads.npz``.

    :raises ValueError: if no complete input group is present
    """
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    with np.load(tensors) as data:
        arrays = {k: data[k] for k in data.files}

    values, grads = {}, {}
    hm = box = None
    if {"x", "y", "mask"} <= arrays.keys():
        hm = heatmap_loss(arrays["x"], arrays["y"], arrays["mask"].astype(bool), cfg.loss)
        _loss_dump("heatmap", hm, values, grads)
    if {"pred", "gt"} <= arrays.keys():
        box = bbox_loss(arrays["pred"], arrays["gt"])
        _loss_dump("bbox", box, values, grads)
    if hm is not None and box is not None:
        _loss_dump("total", total_loss(hm, box), values, grads)
    if {"F_s", "F_r"} <= arrays.keys():
        _loss_dump("align", align_loss(arrays["F_s"], arrays["F_r"], cfg.loss), values, grads)
    if not values:
        raise ValueError("no complete loss input group in " + str(tensors))

    path = write_json(out / "losscheck.json", _meta("losscheck", cfg, losses=values))
    grad_path = out / "losscheck_grads.npz"
    np.savez(grad_path, **grads)
    return CommandResult.finished([path, grad_path], [], values)


def cmd_convert_xyz(cfg: PipelineConfig, out, src) -> CommandResult:
    dst = Path(out) / (Path(src).stem + ".bin")
    n = convert_xyz(src, dst)
    logger.info("wrote %d points to %s", n, dst)
    return CommandResult.finished([dst], [])


def cmd_toy(cfg: PipelineConfig, out) -> CommandResult:
    """Write the procedural toy dataset with the config's seed"""
    manifest = build_toy_dataset(out, cfg.seed)
    return CommandResult.finished([Path(out)], [], manifest)


def pipeline_graph(cfg: PipelineConfig, out, n_frames: int, detections=None) -> StageGraph:
    """Stages segment-ground, forge, filter, update-mask and eval over one output directory"""
    out = Path(out)
    if detections is None:
        detections = Path(_manifest(cfg).root) / "detections.jsonl"
    filtered = out / "filtered.jsonl"

    graph = StageGraph()
    graph.add_stage("segment-ground", lambda: cmd_segment_ground(cfg, out).code)
    graph.add_stage("forge", lambda: cmd_forge(cfg, out, n_frames, out / "ground").code, ["segment-ground"])
    graph.add_stage("filter", lambda: cmd_filter(cfg, out, detections).code)
    graph.add_stage("update-mask", lambda: cmd_update_mask(cfg, out, out / "masks", filtered).code, ["segment-ground", "filter"])
    graph.add_stage("eval", lambda: cmd_eval(cfg, out, filtered).code, ["filter"])
    return graph


def cmd_pipeline(cfg: PipelineConfig, out, n_frames: int = 20, detections=None) -> CommandResult:
    """Run every stage in dependency order"""
    codes = pipeline_graph(cfg, out, n_frames, detections).run()
    write_json(Path(out) / "pipeline.meta.json", _meta("pipeline", cfg, n_frames=n_frames, stages=codes))
    if any(c == EXIT_FATAL for c in codes.values()):
        code = EXIT_FATAL
    elif any(c == EXIT_PARTIAL for c in codes.values()):
        code = EXIT_PARTIAL
    else:
        code = EXIT_OK
    return CommandResult(code, [Path(out)], [s for s, c in codes.items() if c != EXIT_OK], codes)
