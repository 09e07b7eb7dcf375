from hunterforge.ground_seg.ransac import (
    RansacConfig,
    Plane,
    Patch,
    PlaneFit,
    PatchGround,
    partition_patches,
    fit_patch_ground,
    check_constraints,
    seed_mask,
)
from hunterforge.ground_seg.ground_model import GroundModel, segment_ground, sample_insertion_point
