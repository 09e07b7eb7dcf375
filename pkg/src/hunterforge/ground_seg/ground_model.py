from __future__ import annotations
from dataclasses import dataclass, field
from typing import List, Optional, Tuple
import json
import logging

import numpy as np

from hunterforge.tools.types import Nx3, NDArray, IndexArray, R3
from hunterforge.tools.errors import NoGroundError
from hunterforge.tools.utils import child_generator, draw_seed, SeedLike, as_generator
from hunterforge.geometry_core import PointCloud
from hunterforge.ground_seg.ransac import (
    RansacConfig,
    Plane,
    PlaneFit,
    PatchGround,
    partition_patches,
    fit_patch_ground,
)

logger = logging.getLogger(__name__)


@dataclass
class GroundModel:
    """Segmented ground of one frame

    :param patches: the patches with at least one accepted plane
    :type patches: List[PatchGround]
    :param ground_indices: sorted union of ground point indices
    :type ground_indices: IndexArray
    :param ground_points: coordinates of the ground points
    :type ground_points: Nx3
    :param origin: sensor origin that insertion ranges are measured from
    :type origin: R3
    """

    patches: List[PatchGround] = field(default_factory=list)
    ground_indices: IndexArray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    ground_points: Nx3 = field(default_factory=lambda: np.empty((0, 3)))
    origin: R3 = field(default_factory=lambda: np.zeros(3))

    def __len__(self) -> int:
        return len(self.ground_indices)

    def is_empty(self) -> bool:
        return len(self) == 0

    def planes(self) -> List[Plane]:
        return [f.plane for p in self.patches for f in p.fits]

    def ranges(self) -> NDArray:
        return np.linalg.norm(self.ground_points - np.asarray(self.origin), axis=1)

    def height_at(self, xy) -> NDArray:
        """Ground height under (x, y) from the first plane of the covering
        patch, NaN where no patch was accepted"""
        xy = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
        z = np.full(len(xy), np.nan)
        for patch in self.patches:
            x0, x1, y0, y1 = patch.bounds
            inside = np.isnan(z) & (xy[:, 0] >= x0) & (xy[:, 0] <= x1) & (xy[:, 1] >= y0) & (xy[:, 1] <= y1)
            if np.any(inside):
                z[inside] = patch.fits[0].plane.height_at(xy[inside])
        return z

    def to_dict(self) -> dict:
        return {
            "patches": [
                {
                    "patch": list(p.index),
                    "bounds": list(p.bounds),
                    "plane": f.plane.to_list(),
                    "inliers": f.inliers.tolist(),
                }
                for p in self.patches
                for f in p.fits
            ],
            "ground_indices": self.ground_indices.tolist(),
            "ground_points": self.ground_points.tolist(),
            "origin": np.asarray(self.origin).tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> GroundModel:
        patches = {}
        for entry in d.get("patches", []):
            key = tuple(entry.get("patch", (len(patches), 0)))
            if key not in patches:
                patches[key] = PatchGround(key, tuple(entry.get("bounds", (0.0, 0.0, 0.0, 0.0))))
            fit = PlaneFit(Plane.from_list(entry["plane"]), np.asarray(entry["inliers"], dtype=np.int64))
            patches[key].fits.append(fit)
        return cls(
            list(patches.values()),
            np.asarray(d.get("ground_indices", []), dtype=np.int64),
            np.asarray(d.get("ground_points", []), dtype=np.float64).reshape(-1, 3),
            np.asarray(d.get("origin", [0.0, 0.0, 0.0]), dtype=np.float64),
        )

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f)

    @classmethod
    def load(cls, path) -> GroundModel:
        with open(path, "r") as f:
            return cls.from_dict(json.load(f))


def segment_ground(cloud: PointCloud, cfg: Optional[RansacConfig] = None, rng: SeedLike = None, origin=(0.0, 0.0, 0.0)) -> GroundModel:
    """Segment the ground of a frame patch by patch

    Every patch draws from its own generator derived from one master seed
    and the patch index, so the result does not depend on patch order.

    :param cloud: the scene
    :type cloud: PointCloud
    :param cfg: RANSAC parameters, defaults when omitted
    :type cfg: RansacConfig, optional
    :param rng: seed or generator for the master seed, ``cfg.seed`` when omitted
    :type rng: SeedLike
    :param origin: sensor origin
    :return: the ground model
    :rtype: GroundModel
    """
    cfg = cfg or RansacConfig()
    rng = as_generator(cfg.seed if rng is None else rng)
    master = draw_seed(rng)
    model = GroundModel(origin=np.asarray(origin, dtype=np.float64))

    patches = partition_patches(cloud, cfg)
    for patch in patches:
        ground = fit_patch_ground(patch, cfg, child_generator(master, patch.index))
        if ground is not None:
            model.patches.append(ground)

    if model.patches:
        model.ground_indices = np.unique(np.concatenate([p.inliers() for p in model.patches]))
        model.ground_points = cloud.points[model.ground_indices]
    logger.info(
        "ground: %d of %d patches accepted, %d ground points",
        len(model.patches),
        len(patches),
        len(model),
    )
    return model


def sample_insertion_point(ground: GroundModel, rng: np.random.Generator, band_width: float = 0.5) -> R3:
    """Draw a ground location for a new instance

    A range is drawn uniformly between the nearest and farthest ground
    point, then one point is chosen uniformly among the ground points within
    half the band of that range (the nearest range when the band is empty).

    :param ground: the segmented ground
    :type ground: GroundModel
    :param rng: generator
    :type rng: np.random.Generator
    :param band_width: width of the range band in meters
    :type band_width: float
    :raises NoGroundError: if the ground is empty
    :return: the chosen ground point
    :rtype: R3
    """
    if ground.is_empty():
        raise NoGroundError("no ground points to insert on")
    ranges = ground.ranges()
    r = rng.uniform(ranges.min(), ranges.max())
    delta = np.abs(ranges - r)
    candidates = np.flatnonzero(delta <= max(0.5 * band_width, delta.min()))
    return ground.ground_points[candidates[rng.integers(len(candidates))]].copy()
