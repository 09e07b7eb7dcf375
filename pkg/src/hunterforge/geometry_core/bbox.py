from __future__ import annotations
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from hunterforge.tools.types import ArrayLike3, Nx2, Nx3, NDArray, R3
from hunterforge.tools.errors import EmptyInstanceError
from hunterforge.tools.geometry import convex_intersection_area
from hunterforge.tools.linalg import RigidTransform, rotz
from hunterforge.tools.utils import wrap_angle
from hunterforge.geometry_core.point_cloud import PointCloud

# smallest extent assigned to a degenerate (flat or single point) box axis
DIM_FLOOR = 1e-6


@dataclass(frozen=True, eq=False)
class BBox3D:
    """An oriented 3D box

    :param center: (x, y, z) box center in meters
    :type center: R3
    :param dims: (l, w, h) extents along the box's local x, y and z axes
    :type dims: R3
    :param yaw: heading about the z axis, normalized to [-pi, pi)
    :type yaw: float
    """

    center: R3
    dims: R3
    yaw: float = 0.0

    def __post_init__(self):
        center = np.asarray(self.center, dtype=np.float64).reshape(3)
        dims = np.asarray(self.dims, dtype=np.float64).reshape(3)
        if not np.all(dims > 0.0):
            raise ValueError("box dimensions must be strictly positive")
        if not (np.all(np.isfinite(center)) and np.isfinite(self.yaw)):
            raise ValueError("box center and yaw must be finite")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "dims", dims)
        yaw = float(self.yaw)
        if not -np.pi <= yaw < np.pi:
            yaw = float(wrap_angle(yaw))
        object.__setattr__(self, "yaw", yaw)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BBox3D):
            return NotImplemented
        return (
            np.array_equal(self.center, other.center)
            and np.array_equal(self.dims, other.dims)
            and self.yaw == other.yaw
        )

    def __repr__(self) -> str:
        c, d = self.center, self.dims
        return (
            f"BBox3D(center=({c[0]:.3f}, {c[1]:.3f}, {c[2]:.3f}), "
            f"dims=({d[0]:.3f}, {d[1]:.3f}, {d[2]:.3f}), yaw={self.yaw:.3f})"
        )

    @property
    def pose(self) -> RigidTransform:
        """Transform from the box frame to the sensor frame"""
        return RigidTransform.from_yaw_translation(self.yaw, self.center)

    def to_array(self) -> NDArray:
        """[cx, cy, cz, l, w, h, yaw]"""
        return np.concatenate([self.center, self.dims, [self.yaw]])

    @classmethod
    def from_array(cls, values: Sequence[float]) -> BBox3D:
        v = np.asarray(values, dtype=np.float64)
        return cls(v[0:3], v[3:6], float(v[6]))

    def bev_corners(self) -> Nx2:
        """The four footprint corners in counter-clockwise order"""
        l, w = 0.5 * self.dims[0], 0.5 * self.dims[1]
        local = np.array([[l, w], [-l, w], [-l, -w], [l, -w]])
        return local @ rotz(self.yaw)[:2, :2].T + self.center[:2]

    def corners(self) -> Nx3:
        """The eight box corners"""
        signs = np.array([[sx, sy, sz] for sx in (1, -1) for sy in (1, -1) for sz in (1, -1)])
        return self.pose * (0.5 * signs * self.dims)

    def bev_area(self) -> float:
        return float(self.dims[0] * self.dims[1])

    def contains(self, points: Nx3, tol: float = 1e-9) -> NDArray:
        """Boolean mask of points inside the box (boundary within tol)"""
        local = self.pose.inv() * np.asarray(points, dtype=np.float64).reshape(-1, 3)
        return np.all(np.abs(local) <= 0.5 * self.dims + tol, axis=1)


def fit_bbox(points: PointCloud, yaw: float) -> BBox3D:
    """Fit the minimal box with a given heading around a point set

    The points are rotated by -yaw so the box axes become the coordinate axes,
    the axis-aligned extents are taken, and the midpoint is rotated back.

    :param points: the instance points
    :type points: PointCloud
    :param yaw: the box heading
    :type yaw: float
    :raises EmptyInstanceError: if the point set is empty
    :return: the fitted box
    :rtype: BBox3D
    """
    if points.is_empty():
        raise EmptyInstanceError("cannot fit a box to an empty point set")

    R = rotz(yaw)
    local = points.points @ R  # rotate by -yaw
    lo = local.min(axis=0)
    hi = local.max(axis=0)
    dims = np.maximum(hi - lo, DIM_FLOOR)
    center = R @ (0.5 * (lo + hi))
    return BBox3D(center, dims, yaw)


def bev_iou(a: BBox3D, b: BBox3D) -> float:
    """Intersection over union of the bird's-eye-view footprints

    Computed exactly by clipping one rectangle against the other.
    """
    if (
        np.array_equal(a.center[:2], b.center[:2])
        and np.array_equal(a.dims[:2], b.dims[:2])
        and a.yaw == b.yaw
    ):
        return 1.0

    # cheap rejection on circumscribed circles
    ra = 0.5 * np.hypot(a.dims[0], a.dims[1])
    rb = 0.5 * np.hypot(b.dims[0], b.dims[1])
    if np.hypot(*(a.center[:2] - b.center[:2])) >= ra + rb:
        return 0.0

    inter = convex_intersection_area(a.bev_corners(), b.bev_corners())
    union = a.bev_area() + b.bev_area() - inter
    if union <= 0.0:
        return 0.0
    return float(min(max(inter / union, 0.0), 1.0))


def center_distance(a: BBox3D, b: BBox3D) -> float:
    """Euclidean distance between the 3D box centers"""
    d = a.center - b.center
    return float(np.sqrt(np.dot(d, d)))


def place_on_ground(asset_points: PointCloud, ground_point: ArrayLike3) -> RigidTransform:
    """Translation that stands an asset on a ground point

    The asset centroid's (x, y) is moved onto the ground point's (x, y) and
    the asset's lowest point is lowered or raised to the ground point's z.
    The z offset is chosen so the lowest point lands exactly on that height
    whenever a float translation can do so.

    :param asset_points: the asset vertices or points
    :type asset_points: PointCloud
    :param ground_point: the target ground location
    :type ground_point: ArrayLike3
    :return: a pure translation
    :rtype: RigidTransform
    """
    if asset_points.is_empty():
        raise EmptyInstanceError("cannot place an empty asset")
    g = np.asarray(ground_point, dtype=np.float64).reshape(3)
    centroid = asset_points.centroid()
    z_min = asset_points.points[:, 2].min()

    # nudge by ulps until the lowest point lands on the ground height
    tz = g[2] - z_min
    for _ in range(8):
        landed = z_min + tz
        if landed == g[2]:
            break
        tz = np.nextafter(tz, np.inf if landed < g[2] else -np.inf)
    return RigidTransform.Trans(g[0] - centroid[0], g[1] - centroid[1], tz)


__all__ = [
    "BBox3D",
    "DIM_FLOOR",
    "fit_bbox",
    "bev_iou",
    "center_distance",
    "place_on_ground",
]
