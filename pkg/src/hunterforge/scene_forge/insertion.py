from __future__ import annotations
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from hunterforge.tools.types import R3
from hunterforge.tools.linalg import RigidTransform
from hunterforge.geometry_core import BBox3D, fit_bbox, bev_iou, center_distance, place_on_ground
from hunterforge.range_view import RangeImage, project, merge, occlusion_rate
from hunterforge.lidar_sim import BodyPart, HumanAsset, RaycastConfig, raycast
from hunterforge.ground_seg import GroundModel, sample_insertion_point

REJECT_IOU = "iou"
REJECT_CENTER = "center-distance"
REJECT_NO_RETURNS = "no-returns"
REJECT_OCCLUSION = "occlusion"
REJECT_PRIOR = "prior-occlusion"


@dataclass
class InsertionConfig:
    """Judgment thresholds and budgets of ground-guided human insertion

    :param max_occlusion: an instance is kept only below this occlusion rate
    :param max_iou: a new box must overlap every earlier box below this BEV IoU
    :param max_failures: rejected attempts after which a frame is finished
    :param min_center_distance: minimum distance between box centers in meters
    :param target_count: inclusive range of the wanted humans per frame
    :param band_width: range band used when sampling a ground point
    :param range_noise: standard deviation of simulated range noise, 0 is off
    :param seed: master seed
    """

    max_occlusion: float = 0.70
    max_iou: float = 0.35
    max_failures: int = 10
    min_center_distance: float = 0.5
    target_count: Tuple[int, int] = (1, 8)
    band_width: float = 0.5
    range_noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        self.target_count = tuple(int(v) for v in self.target_count)
        if not 0.0 < self.max_occlusion <= 1.0:
            raise ValueError("max_occlusion must be in (0, 1]")
        if not 0.0 <= self.max_iou <= 1.0:
            raise ValueError("max_iou must be in [0, 1]")
        if self.max_failures < 1:
            raise ValueError("max_failures must be at least 1")
        if self.min_center_distance < 0.0 or self.range_noise < 0.0 or self.band_width <= 0.0:
            raise ValueError("distances must be non-negative")
        lo, hi = self.target_count
        if lo < 0 or hi < lo:
            raise ValueError("target_count must be an increasing non-negative range")


@dataclass
class HumanLabel:
    """Label of one inserted human"""

    box: BBox3D
    joints: Dict[BodyPart, R3]
    instance_id: int
    asset_id: str
    n_simulated: int


@dataclass
class InsertedInstance:
    label: HumanLabel
    image: RangeImage


@dataclass
class InsertionResult:
    accepted: bool
    reason: Optional[str] = None
    merged: Optional[RangeImage] = None
    instance: Optional[InsertedInstance] = None
    occlusion: Optional[float] = None


def _geometric_reason(box: BBox3D, existing: Sequence[InsertedInstance], cfg: InsertionConfig) -> Optional[str]:
    for other in existing:
        if bev_iou(box, other.label.box) >= cfg.max_iou:
            return REJECT_IOU
    for other in existing:
        if center_distance(box, other.label.box) < cfg.min_center_distance:
            return REJECT_CENTER
    return None


def try_insert(
    scene_ri: RangeImage,
    asset: HumanAsset,
    ground: GroundModel,
    existing: Sequence[InsertedInstance],
    cfg: InsertionConfig,
    rng: np.random.Generator,
    instance_id: Optional[int] = None,
) -> InsertionResult:
    """Attempt one human insertion into the current merged range image

    The asset is turned by a uniform random yaw and stood on a sampled ground
    point. The box is checked against earlier boxes (BEV IoU and center
    distance) before raycasting. After merging, the new instance must be
    occluded less than ``cfg.max_occlusion`` and so must every earlier
    instance.

    :param scene_ri: the scene with all earlier insertions merged in
    :type scene_ri: RangeImage
    :param asset: the human to insert
    :type asset: HumanAsset
    :param ground: the segmented ground of the scene
    :type ground: GroundModel
    :param existing: earlier accepted instances of this frame
    :type existing: Sequence[InsertedInstance]
    :param cfg: judgment thresholds
    :type cfg: InsertionConfig
    :param rng: generator
    :type rng: np.random.Generator
    :param instance_id: id of the new instance, ``len(existing)`` by default
    :type instance_id: int, optional
    :raises NoGroundError: if the ground model is empty
    :return: the outcome, with the new merged image on acceptance
    :rtype: InsertionResult
    """
    spec = scene_ri.spec
    instance_id = len(existing) if instance_id is None else instance_id

    ground_point = sample_insertion_point(ground, rng, cfg.band_width)
    yaw = rng.uniform(-np.pi, np.pi)
    turned = asset.posed(RigidTransform.Rz(yaw))
    pose = place_on_ground(turned.vertex_cloud(), ground_point) * RigidTransform.Rz(yaw)
    posed = asset.posed(pose)

    box = fit_bbox(posed.vertex_cloud(), posed.yaw)
    reason = _geometric_reason(box, existing, cfg)
    if reason is not None:
        return InsertionResult(False, reason)

    cloud = raycast(asset, pose, spec, RaycastConfig(range_noise=cfg.range_noise), rng, instance_id)
    if cloud.is_empty():
        return InsertionResult(False, REJECT_NO_RETURNS)

    image = project(cloud, spec)
    merged = merge(scene_ri, image)
    occlusion = occlusion_rate(image, merged)
    if occlusion >= cfg.max_occlusion:
        return InsertionResult(False, REJECT_OCCLUSION, occlusion=occlusion)

    for other in existing:
        if occlusion_rate(other.image, merged) >= cfg.max_occlusion:
            return InsertionResult(False, REJECT_PRIOR, occlusion=occlusion)

    label = HumanLabel(box, posed.joints, instance_id, asset.asset_id, image.n_occupied())
    return InsertionResult(True, None, merged, InsertedInstance(label, image), occlusion)
