from __future__ import annotations
import numpy as np

from hunterforge.geometry_core import SourceTag
from hunterforge.scene_forge.synth_frame import SynthFrame


def visualize_synth_frame(frame: SynthFrame, show=True, max_range=None):
    """Top-down view of a synthetic frame: scene points in grey, synthetic
    points colored per instance and the label footprints"""
    import matplotlib.pyplot as plt
    from matplotlib.patches import Polygon

    fig, ax = plt.subplots(figsize=(8, 8))
    pts = frame.cloud.points
    synthetic = (
        frame.cloud.source == SourceTag.SYNTHETIC
        if frame.cloud.source is not None
        else np.zeros(len(pts), dtype=bool)
    )
    ax.scatter(pts[~synthetic, 0], pts[~synthetic, 1], s=0.5, color="0.6")

    colors = plt.get_cmap("tab10")(np.linspace(0.0, 1.0, max(len(frame.labels), 1)))
    for label, color in zip(frame.labels, colors):
        inst = frame.instance_points(label.instance_id).points
        ax.scatter(inst[:, 0], inst[:, 1], s=2.0, color=color)
        ax.add_patch(Polygon(label.box.bev_corners(), closed=True, fill=False, edgecolor=color))

    if max_range is not None:
        ax.set_xlim(-max_range, max_range)
        ax.set_ylim(-max_range, max_range)
    ax.set_aspect("equal")
    ax.set_title(frame.provenance.frame_id)
    if show:
        plt.show()
    return fig, ax
