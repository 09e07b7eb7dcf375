"""Procedural toy dataset

Every sequence is a static sensor at the origin looking at a flat floor with
box and pillar clutter while a few humanoids walk through. Frames are real
data as far as the pipeline is concerned: untagged packed-float clouds, one
ground-truth label file per frame and a detections file in which a fake
detector adds jitter, missed frames, one-frame flickers, low-confidence noise
and a static phantom per sequence.
"""

from __future__ import annotations
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple
import json
import logging

import numpy as np

from hunterforge.tools.types import Nx3, NDArray
from hunterforge.tools.linalg import RigidTransform
from hunterforge.tools.utils import child_generator
from hunterforge.geometry_core import PointCloud, BBox3D, SourceTag, fit_bbox, place_on_ground, write_bin
from hunterforge.range_view import LidarSpec, RangeImage, project, merge, backproject
from hunterforge.lidar_sim import HumanAsset, make_humanoid, capsule, combine_meshes, cast_rays, raycast, humanoid_pool, save_asset
from hunterforge.scene_forge import Manifest, SequenceRecord, FrameRecord
from hunterforge.track_filter import Detection, DetectionFrame, write_detections

logger = logging.getLogger(__name__)

FLOOR_HEIGHT = -1.8
FRAME_DT = 0.1
PHANTOM_DIMS = (0.6, 0.6, 1.7)


@dataclass
class ToyOptions:
    """Size and noise of the generated dataset

    :param n_sequences: number of sequences
    :param n_frames: frames per sequence
    :param n_walkers: humans walking through each sequence
    :param n_boxes: box obstacles per sequence
    :param n_pillars: pillar obstacles per sequence
    :param range_noise: standard deviation of the range noise in meters
    :param detect_prob: chance that a visible human is detected in a frame
    :param flicker_prob: chance of a one-frame false positive per frame
    :param low_conf_prob: chance of a low-confidence false positive per frame
    :param min_visible: returns a human needs to get a ground-truth label
    :param n_assets: procedural humans written to the asset directory
    """

    n_sequences: int = 3
    n_frames: int = 30
    n_walkers: int = 3
    n_boxes: int = 4
    n_pillars: int = 3
    range_noise: float = 0.01
    detect_prob: float = 0.95
    flicker_prob: float = 0.2
    low_conf_prob: float = 0.3
    min_visible: int = 5
    n_assets: int = 4


@dataclass
class Walker:
    start: NDArray
    heading: float
    speed: float
    height: float
    phase: float

    def position(self, t: int) -> NDArray:
        d = np.array([np.cos(self.heading), np.sin(self.heading)])
        return self.start + self.speed * FRAME_DT * t * d

    def asset(self, t: int) -> HumanAsset:
        swing = 0.4 * np.sin(self.phase + 0.8 * t)
        return make_humanoid(self.height, swing, 0.8 * swing, self.heading, "walker", resolution=6)


def cuboid(center, dims, yaw: float = 0.0) -> Tuple[Nx3, NDArray]:
    """Closed triangle mesh of a box"""
    signs = np.array(
        [[-1, -1, -1], [1, -1, -1], [1, 1, -1], [-1, 1, -1], [-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1]],
        dtype=np.float64,
    )
    local = 0.5 * signs * np.asarray(dims, dtype=np.float64)
    vertices = RigidTransform.Rz(yaw) * local + np.asarray(center, dtype=np.float64)
    triangles = np.array(
        [
            [0, 2, 1], [0, 3, 2], [4, 5, 6], [4, 6, 7],
            [0, 1, 5], [0, 5, 4], [1, 2, 6], [1, 6, 5],
            [2, 3, 7], [2, 7, 6], [3, 0, 4], [3, 4, 7],
        ]
    )
    return vertices, triangles


def _annulus(rng: np.random.Generator, r_min: float, r_max: float) -> NDArray:
    r = rng.uniform(r_min, r_max)
    a = rng.uniform(-np.pi, np.pi)
    return np.array([r * np.cos(a), r * np.sin(a)])


def floor_image(spec: LidarSpec, height: float = FLOOR_HEIGHT) -> RangeImage:
    """Range image of an infinite horizontal floor"""
    dirs = spec.beam_directions()
    oz = spec.origin[2]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (height - oz) / dirs[..., 2]
    hit = (dirs[..., 2] < 0.0) & (t <= spec.max_range)
    points = np.asarray(spec.origin) + t[hit][:, None] * dirs[hit]
    return project(PointCloud.tagged(points, SourceTag.SCENE), spec)


def clutter_mesh(rng: np.random.Generator, options: ToyOptions) -> Tuple[Nx3, NDArray]:
    parts = []
    for _ in range(options.n_boxes):
        xy = _annulus(rng, 5.0, 25.0)
        dims = rng.uniform([0.5, 0.5, 0.5], [2.0, 2.0, 1.5])
        parts.append(cuboid([*xy, FLOOR_HEIGHT + 0.5 * dims[2]], dims, rng.uniform(-np.pi, np.pi)))
    for _ in range(options.n_pillars):
        xy = _annulus(rng, 5.0, 25.0)
        parts.append(capsule([*xy, FLOOR_HEIGHT], [*xy, FLOOR_HEIGHT + 2.5], 0.2, 6))

    return combine_meshes(parts)


def make_walkers(rng: np.random.Generator, options: ToyOptions) -> List[Walker]:
    return [
        Walker(
            start=_annulus(rng, 6.0, 16.0),
            heading=rng.uniform(-np.pi, np.pi),
            speed=rng.uniform(1.2, 1.6),
            height=rng.uniform(1.55, 1.85),
            phase=rng.uniform(0.0, 2.0 * np.pi),
        )
        for _ in range(options.n_walkers)
    ]


def render_frame(
    background: RangeImage, walkers: List[Walker], t: int, spec: LidarSpec, rng: np.random.Generator, options: ToyOptions
) -> Tuple[PointCloud, List[BBox3D]]:
    """Raycast the walkers into the static background

    :return: the noisy untagged cloud and the amodal boxes of humans with
        at least ``options.min_visible`` returns
    """
    merged = background
    boxes = {}
    for k, walker in enumerate(walkers):
        asset = walker.asset(t)
        x, y = walker.position(t)
        pose = place_on_ground(asset.vertex_cloud(), (x, y, FLOOR_HEIGHT))
        cloud = raycast(asset, pose, spec, instance_id=k)
        if cloud.is_empty():
            continue
        merged = merge(merged, project(cloud, spec))
        boxes[k] = fit_bbox(asset.vertex_cloud().transformed(pose), walker.heading)

    visible = np.bincount(merged.instance[merged.occupied & (merged.instance >= 0)], minlength=len(walkers))
    labels = [boxes[k] for k in sorted(boxes) if visible[k] >= options.min_visible]

    cloud = backproject(merged)
    origin = np.asarray(spec.origin)
    offset = cloud.points - origin
    r = np.linalg.norm(offset, axis=1)
    noisy = r + rng.normal(0.0, options.range_noise, len(r))
    points = origin + offset * (noisy / r)[:, None]
    return PointCloud(points), labels


def _jitter(box: BBox3D, rng: np.random.Generator, sigma: float) -> BBox3D:
    center = box.center + np.array([*rng.normal(0.0, sigma, 2), 0.0])
    return BBox3D(center, box.dims, box.yaw)


def _standing_box(xy) -> BBox3D:
    return BBox3D(np.array([xy[0], xy[1], FLOOR_HEIGHT + 0.5 * PHANTOM_DIMS[2]]), np.array(PHANTOM_DIMS), 0.0)


def fake_detections(
    labels: List[List[BBox3D]], rng: np.random.Generator, options: ToyOptions
) -> List[List[Tuple[BBox3D, float]]]:
    """Scored boxes per frame of one sequence

    Visible humans are detected with jitter, a static phantom is reported in
    every frame, and flickers and low-confidence boxes appear at random.
    """
    phantom = _standing_box(_annulus(rng, 8.0, 20.0))
    frames = []
    for boxes in labels:
        dets = []
        for box in boxes:
            if rng.uniform() < options.detect_prob:
                dets.append((_jitter(box, rng, 0.05), rng.uniform(0.6, 0.95)))
        dets.append((_jitter(phantom, rng, 0.02), rng.uniform(0.55, 0.8)))
        if rng.uniform() < options.flicker_prob:
            dets.append((_standing_box(_annulus(rng, 5.0, 25.0)), rng.uniform(0.5, 0.9)))
        if rng.uniform() < options.low_conf_prob:
            dets.append((_standing_box(_annulus(rng, 5.0, 25.0)), rng.uniform(0.05, 0.45)))
        frames.append(dets)
    return frames


def _label_record(frame_id: str, sequence: str, boxes) -> dict:
    return {"frame": frame_id, "sequence": sequence, "boxes": [b.to_array().tolist() for b in boxes]}


def build_toy_dataset(out_dir, seed: int = 0, options: Optional[ToyOptions] = None, spec: Optional[LidarSpec] = None) -> Path:
    """Write the toy dataset under ``out_dir``

    Layout: ``clouds/<id>.bin``, ``labels/<id>.json``, ``assets/*.obj`` with
    joint sidecars, ``detections.jsonl``, ``manifest.json`` and a
    ``config.json`` for the ``toy`` preset pointing at all of them.

    :param out_dir: target directory, created if needed
    :param seed: master seed; equal seeds give byte-identical datasets
    :type seed: int
    :return: path of the manifest
    :rtype: Path
    """
    options = options or ToyOptions()
    spec = spec or LidarSpec.toy()
    out = Path(out_dir).resolve()
    for sub in ("clouds", "labels", "assets"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    sequences, det_frames = [], []
    for s in range(options.n_sequences):
        name = f"seq{s:02d}"
        rng = child_generator(seed, (s,))
        vertices, triangles = clutter_mesh(rng, options)
        hits = cast_rays(vertices, triangles, spec)
        clutter = project(PointCloud.tagged(hits.points, SourceTag.SCENE), spec)
        background = merge(floor_image(spec), clutter)
        walkers = make_walkers(rng, options)

        records, labels = [], []
        for t in range(options.n_frames):
            frame_id = f"{name}_{t:03d}"
            cloud, boxes = render_frame(background, walkers, t, spec, rng, options)
            write_bin(out / "clouds" / f"{frame_id}.bin", cloud)
            with open(out / "labels" / f"{frame_id}.json", "w") as f:
                f.write(json.dumps(_label_record(frame_id, name, boxes)) + "\n")
            records.append(FrameRecord(frame_id, out / "clouds" / f"{frame_id}.bin", out / "labels" / f"{frame_id}.json"))
            labels.append(boxes)

        for t, dets in enumerate(fake_detections(labels, rng, options)):
            detections = [Detection(t, box, float(score), k) for k, (box, score) in enumerate(dets)]
            det_frames.append(DetectionFrame(records[t].id, detections, name))
        sequences.append(SequenceRecord(name, records))
        logger.info("toy sequence %s: %d frames", name, options.n_frames)

    pool = humanoid_pool(options.n_assets, child_generator(seed, (options.n_sequences,)))
    for asset in pool:
        save_asset(asset, out / "assets" / f"{asset.asset_id}.obj")

    write_detections(out / "detections.jsonl", det_frames)
    manifest = Manifest("toy", sequences, out)
    manifest.save(out / "manifest.json")
    config = {"dataset": "toy", "manifest": "manifest.json", "asset_dir": "assets", "seed": seed}
    with open(out / "config.json", "w") as f:
        json.dump(config, f, indent=2, sort_keys=True)
    return out / "manifest.json"
