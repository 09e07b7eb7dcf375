from __future__ import annotations
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Dict, List, Optional, Sequence
import json
import logging

import numpy as np

from hunterforge.tools.errors import NoGroundError
from hunterforge.tools.utils import SeedLike, as_generator
from hunterforge.geometry_core import (
    PointCloud,
    SourceTag,
    NO_INSTANCE,
    BBox3D,
    bev_iou,
    center_distance,
    read_bin,
    write_bin,
)
from hunterforge.range_view import LidarSpec, project, backproject
from hunterforge.lidar_sim import BodyPart, BODY_PARTS, HumanAsset
from hunterforge.ground_seg import GroundModel
from hunterforge.scene_forge.insertion import (
    InsertionConfig,
    HumanLabel,
    InsertedInstance,
    try_insert,
)

logger = logging.getLogger(__name__)


@dataclass
class Provenance:
    frame_id: str = ""
    seed: Optional[int] = None
    base_frame: str = ""
    target: int = 0
    attempts: int = 0
    failures: int = 0
    rejections: Dict[str, int] = field(default_factory=dict)


@dataclass
class SynthFrame:
    """A scene with inserted synthetic humans and their labels

    :param cloud: backprojected merged range image, source and instance tagged
    :type cloud: PointCloud
    :param labels: one label per accepted instance
    :type labels: List[HumanLabel]
    :param provenance: base frame, seed and insertion bookkeeping
    :type provenance: Provenance
    """

    cloud: PointCloud
    labels: List[HumanLabel] = field(default_factory=list)
    provenance: Provenance = field(default_factory=Provenance)

    def boxes(self) -> List[BBox3D]:
        return [l.box for l in self.labels]

    def instance_points(self, instance_id: int) -> PointCloud:
        if self.cloud.instance is None:
            return PointCloud.empty()
        return self.cloud.subset(self.cloud.instance == instance_id)

    def occlusion(self, label: HumanLabel) -> float:
        """Occlusion rate of a label re-derived from the point tags"""
        return 1.0 - len(self.instance_points(label.instance_id)) / label.n_simulated

    def labels_dict(self) -> dict:
        c = self.cloud
        if c.source is None or c.instance is None:
            synthetic_instance = []
        else:
            synthetic_instance = c.instance[c.source == SourceTag.SYNTHETIC].tolist()
        p = self.provenance
        return {
            "frame_id": p.frame_id,
            "base_frame": p.base_frame,
            "seed": p.seed,
            "boxes": [l.box.to_array().tolist() for l in self.labels],
            "joints": [{part.value: l.joints[part].tolist() for part in BODY_PARTS} for l in self.labels],
            "ids": [l.instance_id for l in self.labels],
            "asset_ids": [l.asset_id for l in self.labels],
            "n_simulated": [l.n_simulated for l in self.labels],
            "target": p.target,
            "attempts": p.attempts,
            "failures": p.failures,
            "rejections": p.rejections,
            "synthetic_instance": synthetic_instance,
        }

    def save(self, stem) -> None:
        """Write ``<stem>.bin`` (x, y, z, source float32) and ``<stem>.json``"""
        stem = Path(stem)
        write_bin(stem.with_suffix(".bin"), self.cloud)
        with open(stem.with_suffix(".json"), "w") as f:
            json.dump(self.labels_dict(), f)

    @classmethod
    def load(cls, stem) -> SynthFrame:
        stem = Path(stem)
        raw = read_bin(stem.with_suffix(".bin"), extra_as_source=True)
        with open(stem.with_suffix(".json"), "r") as f:
            meta = json.load(f)

        instance = np.full(len(raw), NO_INSTANCE, dtype=np.int32)
        instance[raw.source == SourceTag.SYNTHETIC] = meta.get("synthetic_instance", [])
        cloud = PointCloud(raw.points, raw.source, instance)
        labels = [
            HumanLabel(
                BBox3D.from_array(box),
                {BodyPart(k): np.asarray(v) for k, v in joints.items()},
                int(iid),
                str(aid),
                int(n),
            )
            for box, joints, iid, aid, n in zip(
                meta["boxes"], meta["joints"], meta["ids"], meta["asset_ids"], meta["n_simulated"]
            )
        ]
        prov = Provenance(
            meta.get("frame_id", ""),
            meta.get("seed"),
            meta.get("base_frame", ""),
            meta.get("target", 0),
            meta.get("attempts", 0),
            meta.get("failures", 0),
            meta.get("rejections", {}),
        )
        return cls(cloud, labels, prov)


def synthesize_frame(
    scene: PointCloud,
    asset_pool: Sequence[HumanAsset],
    ground: GroundModel,
    cfg: InsertionConfig,
    rng: SeedLike,
    spec: Optional[LidarSpec] = None,
    frame_id: str = "",
) -> SynthFrame:
    """Insert a random number of humans into one scene

    The wanted count is drawn from ``cfg.target_count``. Insertions are tried
    until that count is reached or ``cfg.max_failures`` attempts have been
    rejected in total. The scene range image is built once and updated after
    each accepted insertion.

    :param scene: the real scene
    :type scene: PointCloud
    :param asset_pool: humans to draw from
    :type asset_pool: Sequence[HumanAsset]
    :param ground: the scene's segmented ground
    :type ground: GroundModel
    :param cfg: judgment thresholds and budgets
    :type cfg: InsertionConfig
    :param rng: an int seed (recorded in the provenance) or a generator
    :type rng: SeedLike
    :param spec: the beam layout, :meth:`LidarSpec.hucenlife` by default
    :type spec: LidarSpec, optional
    :param frame_id: id of the base frame
    :type frame_id: str
    :return: the synthetic frame
    :rtype: SynthFrame
    """
    if not asset_pool:
        raise ValueError("the asset pool is empty")
    spec = spec or LidarSpec.hucenlife()
    seed = int(rng) if isinstance(rng, (int, np.integer)) else None
    rng = as_generator(rng)

    lo, hi = cfg.target_count
    target = int(rng.integers(lo, hi + 1))
    merged = project(scene.with_tags(SourceTag.SCENE), spec)
    inserted: List[InsertedInstance] = []
    rejections = Counter()
    attempts = 0

    while len(inserted) < target and sum(rejections.values()) < cfg.max_failures:
        asset = asset_pool[int(rng.integers(len(asset_pool)))]
        attempts += 1
        try:
            result = try_insert(merged, asset, ground, inserted, cfg, rng)
        except NoGroundError:
            logger.warning("frame %s has no ground, nothing inserted", frame_id)
            break
        if result.accepted:
            merged = result.merged
            inserted.append(result.instance)
        else:
            rejections[result.reason] += 1

    failures = sum(rejections.values())
    logger.debug(
        "frame %s: %d of %d humans inserted, %d failures", frame_id, len(inserted), target, failures
    )
    provenance = Provenance(frame_id, seed, "", target, attempts, failures, dict(sorted(rejections.items())))
    return SynthFrame(backproject(merged), [i.label for i in inserted], provenance)


def validate_frame(frame: SynthFrame, cfg: InsertionConfig, tol: float = 1e-4) -> List[str]:
    """Re-check the insertion judgments on a finished frame

    :return: a description of every violated rule, empty for a valid frame
    :rtype: List[str]
    """
    problems = []
    if frame.provenance.failures > cfg.max_failures:
        problems.append(f"failure budget exceeded: {frame.provenance.failures}")

    for label in frame.labels:
        pts = frame.instance_points(label.instance_id)
        if len(pts) == 0 or not np.any(label.box.contains(pts.points, tol)):
            problems.append(f"instance {label.instance_id}: box holds no synthetic point")
        if label.n_simulated <= 0:
            problems.append(f"instance {label.instance_id}: no simulated returns")
            continue
        occ = frame.occlusion(label)
        if not occ < cfg.max_occlusion:
            problems.append(f"instance {label.instance_id}: occlusion {occ:.3f}")

    for a, b in combinations(frame.labels, 2):
        iou = bev_iou(a.box, b.box)
        if not iou < cfg.max_iou:
            problems.append(f"instances {a.instance_id}/{b.instance_id}: iou {iou:.3f}")
        if center_distance(a.box, b.box) < cfg.min_center_distance:
            problems.append(f"instances {a.instance_id}/{b.instance_id}: centers too close")
    return problems
