from __future__ import annotations
from dataclasses import dataclass
from typing import Optional

import numpy as np

from hunterforge.tools.types import Nx3, NDArray, IndexArray
from hunterforge.tools.linalg import RigidTransform
from hunterforge.geometry_core import PointCloud, SourceTag, NO_INSTANCE
from hunterforge.range_view import LidarSpec
from hunterforge.lidar_sim.human_asset import HumanAsset

PARALLEL_EPS = 1e-9


@dataclass
class RaycastConfig:
    """Options for the simulated LiDAR

    :param range_noise: standard deviation of additive range noise in meters,
        0 disables noise
    :type range_noise: float
    :param max_pairs: ray/triangle pairs tested per vectorized chunk
    :type max_pairs: int
    """

    range_noise: float = 0.0
    max_pairs: int = 500_000


@dataclass(frozen=True)
class RayHits:
    """Nearest mesh intersections of the beams that hit"""

    rows: IndexArray
    cols: IndexArray
    points: Nx3
    ranges: NDArray

    def __len__(self) -> int:
        return self.rows.shape[0]


def _candidate_cells(vertices: Nx3, spec: LidarSpec):
    """Cells whose bin-center ray can reach the mesh bounding sphere"""
    origin = np.asarray(spec.origin)
    center = 0.5 * (vertices.min(axis=0) + vertices.max(axis=0))
    radius = np.max(np.linalg.norm(vertices - center, axis=1))
    dirs = spec.beam_directions()
    rows, cols = np.indices(spec.shape)
    to_center = center - origin
    dist = np.linalg.norm(to_center)
    if dist <= radius:
        return rows.ravel(), cols.ravel(), dirs.reshape(-1, 3)

    cos_alpha = np.sqrt(max(1.0 - (radius / dist) ** 2, 0.0))
    keep = (dirs @ (to_center / dist)) >= cos_alpha - 1e-12
    return rows[keep], cols[keep], dirs[keep]


def _nearest_hits(origin, dirs: Nx3, v0: Nx3, e1: Nx3, e2: Nx3, max_pairs: int) -> NDArray:
    """Moller-Trumbore distances of the nearest triangle per ray, inf on a miss"""
    n_tri = v0.shape[0]
    s = origin - v0
    q = np.cross(s, e1)
    t_num = np.einsum("ij,ij->i", q, e2)
    chunk = max(1, max_pairs // n_tri)

    out = np.full(dirs.shape[0], np.inf)
    for start in range(0, dirs.shape[0], chunk):
        d = dirs[start : start + chunk]
        p = np.cross(d[:, None, :], e2[None, :, :])
        det = np.einsum("tk,rtk->rt", e1, p)
        ok = np.abs(det) >= PARALLEL_EPS
        inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
        u = np.einsum("tk,rtk->rt", s, p) * inv
        v = (d @ q.T) * inv
        t = t_num[None, :] * inv
        hit = ok & (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0) & (t > PARALLEL_EPS)
        out[start : start + chunk] = np.where(hit, t, np.inf).min(axis=1)
    return out


def cast_rays(vertices: Nx3, triangles: NDArray, spec: LidarSpec, config: Optional[RaycastConfig] = None) -> RayHits:
    """Cast one ray per range image cell through its bin center

    Every ray returns its nearest intersection with the mesh, which gives
    self-occlusion. Rays are restricted to the cone around the mesh bounding
    sphere; hits beyond max_range are dropped.

    :param vertices: (V, 3) mesh vertices in the sensor frame
    :type vertices: Nx3
    :param triangles: (T, 3) vertex indices
    :type triangles: NDArray
    :param spec: the beam layout
    :type spec: LidarSpec
    :return: the hits
    :rtype: RayHits
    """
    config = config or RaycastConfig()
    vertices = np.asarray(vertices, dtype=np.float64)
    triangles = np.asarray(triangles, dtype=np.int64)
    empty = RayHits(np.empty(0, np.int64), np.empty(0, np.int64), np.empty((0, 3)), np.empty(0))
    if len(triangles) == 0:
        return empty

    rows, cols, dirs = _candidate_cells(vertices, spec)
    if rows.size == 0:
        return empty

    origin = np.asarray(spec.origin)
    v0 = vertices[triangles[:, 0]]
    e1 = vertices[triangles[:, 1]] - v0
    e2 = vertices[triangles[:, 2]] - v0
    t = _nearest_hits(origin, dirs, v0, e1, e2, config.max_pairs)

    hit = np.isfinite(t) & (t <= spec.max_range)
    rows, cols, dirs, t = rows[hit], cols[hit], dirs[hit], t[hit]
    return RayHits(rows, cols, origin + t[:, None] * dirs, t)


def raycast(
    asset: HumanAsset,
    pose: RigidTransform,
    spec: LidarSpec,
    config: Optional[RaycastConfig] = None,
    rng: Optional[np.random.Generator] = None,
    instance_id: int = NO_INSTANCE,
) -> PointCloud:
    """Simulate the LiDAR returns of a posed human

    Meshes behind the sensor or outside the field of view give an empty cloud.

    :param asset: the human mesh
    :type asset: HumanAsset
    :param pose: placement of the asset in the sensor frame
    :type pose: RigidTransform
    :param spec: the beam layout
    :type spec: LidarSpec
    :param config: noise and chunking options
    :type config: RaycastConfig, optional
    :param rng: generator for range noise, required only when noise is on
    :type rng: np.random.Generator, optional
    :param instance_id: instance id written to every point
    :type instance_id: int
    :return: synthetic points tagged with their beam row
    :rtype: PointCloud
    """
    config = config or RaycastConfig()
    hits = cast_rays(pose * asset.vertices, asset.triangles, spec, config)
    points, rows = hits.points, hits.rows

    if config.range_noise > 0.0 and len(hits) > 0:
        if rng is None:
            raise ValueError("range noise requires a random generator")
        ranges = np.maximum(hits.ranges + rng.normal(0.0, config.range_noise, len(hits)), PARALLEL_EPS)
        dirs = (points - np.asarray(spec.origin)) / hits.ranges[:, None]
        points = np.asarray(spec.origin) + ranges[:, None] * dirs
        keep = ranges <= spec.max_range
        points, rows = points[keep], rows[keep]

    cloud = PointCloud.tagged(points, SourceTag.SYNTHETIC, instance_id)
    return PointCloud(cloud.points, cloud.source, cloud.instance, channel=rows)
