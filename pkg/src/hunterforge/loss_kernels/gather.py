from __future__ import annotations
from typing import Sequence

import numpy as np

from hunterforge.geometry_core import BBox3D
from hunterforge.supervision import BevGrid
from hunterforge.loss_kernels.losses import FeatureBatch, FeatureRole


def gather_features(feature_map, boxes: Sequence[BBox3D], grid: BevGrid, role=FeatureRole.SYNTHETIC) -> FeatureBatch:
    """Sample a (C, H', W') BEV feature map at the center cell of each box

    This is a fixed convention for building alignment batches. Boxes whose
    center is off the grid are skipped.
    """
    fmap = np.asarray(feature_map, dtype=np.float64)
    if fmap.shape[1:] != grid.shape:
        raise ValueError(f"feature map {fmap.shape} does not match grid {grid.shape}")
    if not boxes:
        return FeatureBatch(np.empty((0, fmap.shape[0])), role)
    centers = np.array([b.center[:2] for b in boxes])
    i, j, inside = grid.cell_of(centers)
    return FeatureBatch(fmap[:, i[inside], j[inside]].T, role)
