from hunterforge.lidar_sim.human_asset import (
    BodyPart,
    BODY_PARTS,
    HumanAsset,
    read_obj,
    write_obj,
    load_asset,
    save_asset,
)
from hunterforge.lidar_sim.humanoid import make_humanoid, humanoid_pool, ellipsoid, capsule, combine_meshes
from hunterforge.lidar_sim.raycast import RaycastConfig, RayHits, cast_rays, raycast
