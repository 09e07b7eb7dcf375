from hunterforge.geometry_core.point_cloud import PointCloud, SourceTag, NO_INSTANCE
from hunterforge.geometry_core.bbox import (
    BBox3D,
    DIM_FLOOR,
    fit_bbox,
    bev_iou,
    center_distance,
    place_on_ground,
)
from hunterforge.geometry_core.cloud_io import read_bin, write_bin, read_xyz, read_cloud
