from hunterforge.supervision.bev_grid import BevGrid, Mask, HeatmapGrid, check_same_grid
from hunterforge.supervision.masks import (
    MaskConfig,
    vacant_ground_mask,
    compose_training_mask,
    footprint_raster,
    update_mask,
)
from hunterforge.supervision.heatmap import gaussian_radius, gaussian_2d, draw_gaussian, render_heatmap
from hunterforge.supervision.joints import JointState, JointSet, visible_joints
from hunterforge.supervision.visualization import visualize_mask, visualize_heatmap
