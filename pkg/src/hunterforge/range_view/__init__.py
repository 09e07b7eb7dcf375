from hunterforge.range_view.lidar_spec import LidarSpec
from hunterforge.range_view.range_image import (
    RangeImage,
    project,
    backproject,
    merge,
    occlusion_rate,
    surviving_cells,
)
