from __future__ import annotations
from typing import Optional, Sequence

import numpy as np

from hunterforge.tools.types import FloatRaster
from hunterforge.geometry_core import BBox3D
from hunterforge.supervision.bev_grid import BevGrid, HeatmapGrid
from hunterforge.supervision.masks import MaskConfig


def gaussian_radius(det_size, min_overlap: float = 0.7) -> float:
    """Largest center offset, in cells, that keeps a box of ``det_size``
    (height, width) above ``min_overlap`` IoU with the ground truth"""
    height, width = det_size

    a1 = 1
    b1 = height + width
    c1 = width * height * (1 - min_overlap) / (1 + min_overlap)
    sq1 = np.sqrt(b1**2 - 4 * a1 * c1)
    r1 = (b1 + sq1) / 2

    a2 = 4
    b2 = 2 * (height + width)
    c2 = (1 - min_overlap) * width * height
    sq2 = np.sqrt(b2**2 - 4 * a2 * c2)
    r2 = (b2 + sq2) / 2

    a3 = 4 * min_overlap
    b3 = -2 * min_overlap * (height + width)
    c3 = (min_overlap - 1) * width * height
    sq3 = np.sqrt(b3**2 - 4 * a3 * c3)
    r3 = (b3 + sq3) / 2
    return float(min(r1, r2, r3))


def gaussian_2d(radius: int) -> FloatRaster:
    """(2r+1) x (2r+1) kernel with sigma (2r+1)/6 and peak exactly 1"""
    diameter = 2 * radius + 1
    sigma = diameter / 6
    m = np.arange(-radius, radius + 1, dtype=np.float64)
    y, x = np.meshgrid(m, m, indexing="ij")
    h = np.exp(-(x * x + y * y) / (2 * sigma * sigma))
    h[h < np.finfo(h.dtype).eps * h.max()] = 0
    return h


def draw_gaussian(heatmap: FloatRaster, center, radius: int) -> FloatRaster:
    """Splat a kernel at integer ``center`` (i, j), keeping the per-cell max"""
    gaussian = gaussian_2d(radius)
    i, j = int(center[0]), int(center[1])
    H, W = heatmap.shape

    top, bottom = min(i, radius), min(H - i, radius + 1)
    left, right = min(j, radius), min(W - j, radius + 1)

    masked_heatmap = heatmap[i - top : i + bottom, j - left : j + right]
    masked_gaussian = gaussian[radius - top : radius + bottom, radius - left : radius + right]
    if min(masked_gaussian.shape) > 0 and min(masked_heatmap.shape) > 0:
        np.maximum(masked_heatmap, masked_gaussian, out=masked_heatmap)
    return heatmap


def render_heatmap(labels: Sequence[BBox3D], grid: BevGrid, cfg: Optional[MaskConfig] = None) -> HeatmapGrid:
    """Center heatmap target of a set of boxes

    Each box whose BEV center lies on the grid adds a Gaussian at its center
    cell; overlapping Gaussians combine by per-cell max.

    :param labels: the boxes
    :type labels: Sequence[BBox3D]
    :param grid: the BEV grid
    :type grid: BevGrid
    :param cfg: radius rule parameters
    :type cfg: MaskConfig, optional
    :return: the heatmap y
    :rtype: HeatmapGrid
    """
    cfg = cfg or MaskConfig()
    heatmap = np.zeros(grid.shape)
    for box in labels:
        i, j, inside = grid.cell_of(box.center[:2])
        if not inside[0]:
            continue
        size = (box.dims[0] / grid.cell, box.dims[1] / grid.cell)
        radius = max(cfg.min_radius, int(gaussian_radius(size, cfg.min_overlap)))
        draw_gaussian(heatmap, (i[0], j[0]), radius)
    return HeatmapGrid(grid, heatmap)
