from __future__ import annotations
from dataclasses import dataclass
from enum import IntEnum
from typing import Optional, Sequence

import numpy as np

from hunterforge.tools.types import Nx3, NDArray
from hunterforge.tools.linalg import RigidTransform


class SourceTag(IntEnum):
    SCENE = 0
    SYNTHETIC = 1


NO_INSTANCE = -1


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Unordered 3D points in the sensor frame (meters, double precision)

    :param points: (N, 3) coordinates
    :type points: Nx3
    :param source: optional per-point :class:`SourceTag` values
    :type source: NDArray | None
    :param instance: optional per-point instance ids, -1 for scene points
    :type instance: NDArray | None
    :param channel: optional per-point beam row index
    :type channel: NDArray | None
    """

    points: Nx3
    source: Optional[NDArray] = None
    instance: Optional[NDArray] = None
    channel: Optional[NDArray] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        object.__setattr__(self, "points", pts)
        for name, dtype in (("source", np.int8), ("instance", np.int32), ("channel", np.int32)):
            attr = getattr(self, name)
            if attr is None:
                continue
            attr = np.asarray(attr, dtype=dtype).reshape(-1)
            if attr.shape[0] != pts.shape[0]:
                raise ValueError(f"attribute '{name}' must be defined for every point")
            object.__setattr__(self, name, attr)

    def __len__(self) -> int:
        return self.points.shape[0]

    def __repr__(self) -> str:
        return f"PointCloud(n={len(self)})"

    def is_empty(self) -> bool:
        return len(self) == 0

    @classmethod
    def empty(cls) -> PointCloud:
        return cls(np.empty((0, 3)))

    @classmethod
    def tagged(cls, points: Nx3, source: SourceTag, instance: int = NO_INSTANCE) -> PointCloud:
        """Create a cloud whose points all share one source tag and instance id"""
        n = np.asarray(points).reshape(-1, 3).shape[0]
        return cls(
            points,
            source=np.full(n, int(source), dtype=np.int8),
            instance=np.full(n, instance, dtype=np.int32),
        )

    def centroid(self) -> NDArray:
        return self.points.mean(axis=0)

    def subset(self, index) -> PointCloud:
        """Select points by boolean mask or index array"""
        pick = lambda a: None if a is None else a[index]
        return PointCloud(
            self.points[index], pick(self.source), pick(self.instance), pick(self.channel)
        )

    def transformed(self, transform: RigidTransform) -> PointCloud:
        return PointCloud(transform * self.points, self.source, self.instance, self.channel)

    def with_tags(self, source: SourceTag, instance: int = NO_INSTANCE) -> PointCloud:
        n = len(self)
        return PointCloud(
            self.points,
            np.full(n, int(source), dtype=np.int8),
            np.full(n, instance, dtype=np.int32),
            self.channel,
        )

    @staticmethod
    def concatenate(clouds: Sequence[PointCloud]) -> PointCloud:
        """Stack clouds; an attribute is kept only if every cloud has it"""
        if not clouds:
            return PointCloud.empty()
        points = np.vstack([c.points for c in clouds])

        def stack(name):
            attrs = [getattr(c, name) for c in clouds]
            if any(a is None for a in attrs):
                return None
            return np.concatenate(attrs)

        return PointCloud(points, stack("source"), stack("instance"), stack("channel"))
