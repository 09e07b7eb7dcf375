from __future__ import annotations
from dataclasses import dataclass
import struct

import numpy as np

from hunterforge.tools.types import BoolRaster, FloatRaster, NDArray
from hunterforge.tools.errors import EmptyInstanceError, SpecMismatchError
from hunterforge.geometry_core import PointCloud, SourceTag, NO_INSTANCE
from hunterforge.range_view.lidar_spec import LidarSpec

_HEADER = struct.Struct("<8d")
_CELL = np.dtype([("occupied", "u1"), ("xyz", "<f4", (3,))])


@dataclass(frozen=True, eq=False)
class RangeImage:
    """An H x W grid of LiDAR returns, at most one point per cell

    Unoccupied cells carry a zero point, the scene source tag and no instance.

    :param spec: the beam layout
    :type spec: LidarSpec
    :param occupied: (H, W) occupancy flags
    :type occupied: BoolRaster
    :param points: (H, W, 3) stored points
    :type points: FloatRaster
    :param source: (H, W) source tags of the stored points
    :type source: NDArray
    :param instance: (H, W) instance ids of the stored points
    :type instance: NDArray
    """

    spec: LidarSpec
    occupied: BoolRaster
    points: FloatRaster
    source: NDArray
    instance: NDArray

    def __post_init__(self):
        H, W = self.spec.shape
        if self.occupied.shape != (H, W) or self.points.shape != (H, W, 3):
            raise ValueError("range image arrays do not match the LidarSpec shape")

    @classmethod
    def empty(cls, spec: LidarSpec) -> RangeImage:
        H, W = spec.shape
        return cls(
            spec,
            np.zeros((H, W), dtype=bool),
            np.zeros((H, W, 3)),
            np.zeros((H, W), dtype=np.int8),
            np.full((H, W), NO_INSTANCE, dtype=np.int32),
        )

    @property
    def shape(self):
        return self.spec.shape

    def n_occupied(self) -> int:
        return int(self.occupied.sum())

    def distances(self) -> FloatRaster:
        """Range D of every cell's point from the sensor origin, +inf if empty"""
        rel = self.points - np.asarray(self.spec.origin)
        d = np.sqrt(np.einsum("ijk,ijk->ij", rel, rel))
        return np.where(self.occupied, d, np.inf)

    def same_cells(self, other: RangeImage) -> bool:
        """Cell-for-cell equality of occupancy and stored points"""
        return (
            self.spec == other.spec
            and np.array_equal(self.occupied, other.occupied)
            and np.array_equal(self.points[self.occupied], other.points[other.occupied])
        )

    def to_bytes(self) -> bytes:
        s = self.spec
        header = _HEADER.pack(
            float(s.n_rows), float(s.n_cols), s.min_elev, s.max_elev, s.max_range, *s.origin
        )
        cells = np.zeros(self.shape, dtype=_CELL)
        cells["occupied"] = self.occupied
        cells["xyz"] = self.points
        return header + cells.tobytes(order="C")

    @classmethod
    def from_bytes(cls, data: bytes) -> RangeImage:
        h = _HEADER.unpack_from(data, 0)
        spec = LidarSpec(int(h[0]), int(h[1]), h[2], h[3], h[4], (h[5], h[6], h[7]))
        cells = np.frombuffer(data, dtype=_CELL, offset=_HEADER.size).reshape(spec.shape)
        occupied = cells["occupied"].astype(bool)
        points = np.where(occupied[..., None], cells["xyz"].astype(np.float64), 0.0)
        source = np.zeros(spec.shape, dtype=np.int8)
        instance = np.full(spec.shape, NO_INSTANCE, dtype=np.int32)
        return cls(spec, occupied, points, source, instance)

    def save(self, path) -> None:
        with open(path, "wb") as f:
            f.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> RangeImage:
        with open(path, "rb") as f:
            return cls.from_bytes(f.read())


def project(cloud: PointCloud, spec: LidarSpec) -> RangeImage:
    """Project a point cloud into a range image

    Points outside the field of view or beyond max_range are dropped. When
    several points share a cell, the cell keeps the nearest one (ties go to
    the point listed first).

    :param cloud: the points to project
    :type cloud: PointCloud
    :param spec: the beam layout
    :type spec: LidarSpec
    :return: the range image
    :rtype: RangeImage
    """
    image = RangeImage.empty(spec)
    if cloud.is_empty():
        return image

    rows, cols, ranges, valid = spec.cell_index(cloud.points)
    idx = np.flatnonzero(valid)
    if idx.size == 0:
        return image

    flat = rows[idx] * spec.n_cols + cols[idx]
    order = np.lexsort((idx, ranges[idx], flat))
    flat_sorted = flat[order]
    _, first = np.unique(flat_sorted, return_index=True)
    winners = idx[order[first]]
    cells = flat_sorted[first]

    H, W = spec.shape
    occupied = np.zeros(H * W, dtype=bool)
    points = np.zeros((H * W, 3))
    source = np.zeros(H * W, dtype=np.int8)
    instance = np.full(H * W, NO_INSTANCE, dtype=np.int32)

    occupied[cells] = True
    points[cells] = cloud.points[winners]
    if cloud.source is not None:
        source[cells] = cloud.source[winners]
    if cloud.instance is not None:
        instance[cells] = cloud.instance[winners]

    return RangeImage(
        spec, occupied.reshape(H, W), points.reshape(H, W, 3), source.reshape(H, W), instance.reshape(H, W)
    )


def backproject(image: RangeImage) -> PointCloud:
    """The stored points of all occupied cells in row-major order"""
    rows, cols = np.nonzero(image.occupied)
    return PointCloud(
        image.points[rows, cols].copy(),
        source=image.source[rows, cols],
        instance=image.instance[rows, cols],
        channel=rows,
    )


def _check_specs(a: RangeImage, b: RangeImage) -> None:
    if a.spec != b.spec:
        raise SpecMismatchError("range images were built with different LidarSpecs")


def merge(scene: RangeImage, instance: RangeImage) -> RangeImage:
    """Insert an instance range image into a scene range image

    Per cell the scene point is kept if it is strictly closer than the
    instance point; otherwise the instance point wins. Empty cells count as
    infinitely far, so an occupied side always beats an empty one.

    :raises SpecMismatchError: if the images do not share a LidarSpec
    """
    _check_specs(scene, instance)
    take = instance.occupied & ~(scene.distances() < instance.distances())
    return RangeImage(
        scene.spec,
        scene.occupied | instance.occupied,
        np.where(take[..., None], instance.points, scene.points),
        np.where(take, instance.source, scene.source),
        np.where(take, instance.instance, scene.instance),
    )


def surviving_cells(instance: RangeImage, merged: RangeImage) -> BoolRaster:
    """Instance cells whose point is still stored in the merged image"""
    _check_specs(instance, merged)
    same = np.all(merged.points == instance.points, axis=-1)
    return instance.occupied & merged.occupied & same


def occlusion_rate(instance: RangeImage, merged: RangeImage) -> float:
    """Fraction of an instance's returns lost in a merged image

    :raises EmptyInstanceError: if the instance image has no occupied cell
    """
    total = instance.n_occupied()
    if total == 0:
        raise EmptyInstanceError("instance range image is empty")
    survived = int(surviving_cells(instance, merged).sum())
    return 1.0 - survived / total
