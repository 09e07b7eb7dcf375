from __future__ import annotations
import numpy as np

from hunterforge.supervision.bev_grid import Mask, HeatmapGrid


def _extent(grid):
    # imshow extent for a raster with rows along x and columns along y
    return [grid.y_min, grid.y_max, grid.x_min, grid.x_max]


def visualize_mask(mask: Mask, show=True, heatmap: HeatmapGrid = None):
    """Render a mask, optionally with a heatmap overlaid"""
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 8))
    ax.imshow(mask.raster, origin="lower", extent=_extent(mask.grid), cmap="Greys_r", vmin=0, vmax=1)
    if heatmap is not None:
        overlay = np.ma.masked_where(heatmap.raster <= 0.0, heatmap.raster)
        ax.imshow(overlay, origin="lower", extent=_extent(heatmap.grid), cmap="plasma", alpha=0.8, vmin=0, vmax=1)
    ax.set_xlabel("y [m]")
    ax.set_ylabel("x [m]")
    if show:
        plt.show()
    return fig, ax


def visualize_heatmap(heatmap: HeatmapGrid, show=True):
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 8))
    im = ax.imshow(heatmap.raster, origin="lower", extent=_extent(heatmap.grid), cmap="plasma", vmin=0, vmax=1)
    fig.colorbar(im, ax=ax)
    if show:
        plt.show()
    return fig, ax
