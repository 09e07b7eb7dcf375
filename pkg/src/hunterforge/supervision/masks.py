from __future__ import annotations
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple
import math

import numpy as np

from hunterforge.tools.geometry import points_in_rotated_rect
from hunterforge.geometry_core import PointCloud, BBox3D
from hunterforge.ground_seg import GroundModel
from hunterforge.supervision.bev_grid import BevGrid, Mask, HeatmapGrid, check_same_grid


def _default_joint_radii() -> Dict[str, float]:
    return {
        "trunk": 0.4,
        "left_leg": 0.22,
        "right_leg": 0.22,
        "head": 0.3,
        "left_arm": 0.15,
        "right_arm": 0.15,
    }


@dataclass
class MaskConfig:
    """Supervision raster parameters

    :param z_range: column height band above the local ground in meters
    :param voxel_z: vertical voxel size of the vacancy column
    :param min_empty_fraction: a cell is vacant when more than this fraction
        of its column voxels is empty
    :param ground_height: ground height used where no ground plane is known
    :param min_overlap: overlap of the Gaussian radius rule
    :param min_radius: smallest Gaussian radius in cells
    :param expand: minimum (length, width) of a pseudo-label footprint in meters
    :param joint_min_points: points needed within a joint radius to be visible
    :param joint_radii: visibility radius per body part in meters
    """

    z_range: Tuple[float, float] = (0.0, 2.5)
    voxel_z: float = 0.25
    min_empty_fraction: float = 0.8
    ground_height: float = 0.0
    min_overlap: float = 0.7
    min_radius: int = 2
    expand: Tuple[float, float] = (2.0, 2.0)
    joint_min_points: int = 10
    joint_radii: Dict[str, float] = field(default_factory=_default_joint_radii)

    def __post_init__(self):
        self.z_range = tuple(float(v) for v in self.z_range)
        self.expand = tuple(float(v) for v in self.expand)
        if not self.z_range[0] < self.z_range[1]:
            raise ValueError("z_range must be increasing")
        positive = (self.voxel_z, self.min_empty_fraction, self.min_overlap, *self.expand)
        if min(positive) <= 0.0 or self.min_radius < 0 or self.joint_min_points < 1:
            raise ValueError("mask parameters must be positive")
        if min(self.joint_radii.values()) <= 0.0:
            raise ValueError("joint radii must be positive")

    @property
    def n_column_voxels(self) -> int:
        return math.ceil((self.z_range[1] - self.z_range[0]) / self.voxel_z)


def vacant_ground_mask(
    cloud: PointCloud,
    grid: BevGrid,
    cfg: Optional[MaskConfig] = None,
    ground: Optional[GroundModel] = None,
) -> Mask:
    """Mark BEV cells whose column above the ground is mostly empty

    The column over each cell spans ``cfg.z_range`` above the local ground
    height (from the ground model where a plane covers the cell, else
    ``cfg.ground_height``) and is split into voxels of ``cfg.voxel_z``.

    :param cloud: the scene
    :type cloud: PointCloud
    :param grid: the BEV grid
    :type grid: BevGrid
    :param cfg: vacancy parameters
    :type cfg: MaskConfig, optional
    :param ground: segmented ground giving local heights
    :type ground: GroundModel, optional
    :return: the vacant-ground mask M
    :rtype: Mask
    """
    cfg = cfg or MaskConfig()
    H, W = grid.shape
    n = cfg.n_column_voxels

    base = np.full((H, W), cfg.ground_height)
    if ground is not None and not ground.is_empty():
        cx, cy = grid.cell_centers()
        z = ground.height_at(np.stack([cx.ravel(), cy.ravel()], axis=1)).reshape(H, W)
        base = np.where(np.isnan(z), base, z)

    occupied = np.zeros((H, W), dtype=np.int64)
    if not cloud.is_empty():
        i, j, inside = grid.cell_of(cloud.points[:, :2])
        rel = cloud.points[:, 2] - base[i, j] - cfg.z_range[0]
        k = np.floor(rel / cfg.voxel_z).astype(np.int64)
        keep = inside & (rel >= 0.0) & (k < n)
        voxels = np.unique((i[keep] * W + j[keep]) * n + k[keep])
        np.add.at(occupied.reshape(-1), voxels // n, 1)

    empty = n - occupied
    return Mask(grid, empty > cfg.min_empty_fraction * n)


def compose_training_mask(M: Mask, y: HeatmapGrid) -> Mask:
    """M* = M or (y > 0)

    :raises GridMismatchError: if the rasters live on different grids
    """
    check_same_grid(M.grid, y.grid)
    return Mask(M.grid, M.raster | (y.raster > 0.0))


def footprint_raster(boxes: Sequence[BBox3D], grid: BevGrid, expand=(2.0, 2.0)) -> np.ndarray:
    """Cells whose center lies in a box footprint grown to at least ``expand``"""
    cx, cy = grid.cell_centers()
    centers = np.stack([cx.ravel(), cy.ravel()], axis=1)
    P = np.zeros(centers.shape[0], dtype=bool)
    for box in boxes:
        length = max(box.dims[0], expand[0])
        width = max(box.dims[1], expand[1])
        P |= points_in_rotated_rect(centers, box.center[:2], length, width, box.yaw)
    return P.reshape(grid.shape)


def update_mask(M: Mask, pseudo_labels: Sequence[BBox3D], cfg: Optional[MaskConfig] = None) -> Mask:
    """Receptive field update M' = M or not P

    P is the union of the pseudo-label BEV footprints, each expanded to at
    least ``cfg.expand`` around the box center.
    """
    cfg = cfg or MaskConfig()
    P = footprint_raster(pseudo_labels, M.grid, cfg.expand)
    return Mask(M.grid, M.raster | ~P)
