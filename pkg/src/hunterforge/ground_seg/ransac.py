from __future__ import annotations
from dataclasses import dataclass, field
from typing import List, Optional, Tuple
import logging

import numpy as np

from hunterforge.tools.types import Nx3, NDArray, IndexArray, R3
from hunterforge.geometry_core import PointCloud

logger = logging.getLogger(__name__)

COLLINEAR_EPS = 1e-9
MAX_REDRAWS = 10


@dataclass
class RansacConfig:
    """Parameters of the patch-wise constrained ground RANSAC

    :param patch_size: (x, y) patch extent in meters
    :param voxel_size: (x, y, z) voxel size used to find seed voxels
    :param inlier_threshold: point-to-plane inlier distance in meters
    :param min_plane_points: minimum inliers of an accepted plane
    :param max_below_fraction: points below the plane, relative to its inliers
    :param max_below_mean_dist: mean distance of below-plane points in meters
    :param max_tilt: maximum angle between plane and xy-plane in degrees
    :param confirm_reruns: constrained refits combined after an acceptance
    :param iterations: candidate planes per RANSAC run
    :param detection_range: (x_min, x_max, y_min, y_max, z_min, z_max)
    :param seed: master seed of the per-patch generators
    """

    patch_size: Tuple[float, float] = (5.0, 5.0)
    voxel_size: Tuple[float, float, float] = (0.1, 0.1, 0.05)
    inlier_threshold: float = 0.06
    min_plane_points: int = 50
    max_below_fraction: float = 0.20
    max_below_mean_dist: float = 0.15
    max_tilt: float = 25.0
    confirm_reruns: int = 6
    iterations: int = 200
    detection_range: Tuple[float, float, float, float, float, float] = (
        -25.6, 25.6, -51.2, 51.2, -2.5, 7.5
    )
    seed: int = 0

    def __post_init__(self):
        self.patch_size = tuple(float(v) for v in self.patch_size)
        self.voxel_size = tuple(float(v) for v in self.voxel_size)
        self.detection_range = tuple(float(v) for v in self.detection_range)
        positive = (
            *self.patch_size,
            *self.voxel_size,
            self.inlier_threshold,
            self.max_below_fraction,
            self.max_below_mean_dist,
            self.max_tilt,
        )
        if min(positive) <= 0.0 or self.min_plane_points < 1 or self.iterations < 1:
            raise ValueError("RANSAC thresholds must be positive")
        if self.confirm_reruns < 0:
            raise ValueError("confirm_reruns must be non-negative")
        r = self.detection_range
        if not (r[0] < r[1] and r[2] < r[3] and r[4] < r[5]):
            raise ValueError("detection range bounds must be increasing")


@dataclass(frozen=True, eq=False)
class Plane:
    """A plane n . p = d with a unit normal pointing up"""

    normal: R3
    offset: float

    def signed_distance(self, points: Nx3) -> NDArray:
        return np.asarray(points).reshape(-1, 3) @ self.normal - self.offset

    def tilt(self) -> float:
        """Angle to the xy-plane in degrees"""
        return float(np.degrees(np.arccos(np.clip(abs(self.normal[2]), 0.0, 1.0))))

    def height_at(self, xy) -> NDArray:
        xy = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
        n = self.normal
        return (self.offset - xy @ n[:2]) / n[2]

    def to_list(self) -> List[float]:
        return [*map(float, self.normal), float(self.offset)]

    @classmethod
    def from_list(cls, values) -> Plane:
        return cls(np.asarray(values[:3], dtype=np.float64), float(values[3]))


@dataclass
class Patch:
    """The in-range points of one cell of the patch grid"""

    index: Tuple[int, int]
    bounds: Tuple[float, float, float, float]
    indices: IndexArray
    points: Nx3

    def __len__(self) -> int:
        return len(self.indices)


@dataclass
class PlaneFit:
    plane: Plane
    inliers: IndexArray


@dataclass
class PatchGround:
    """Accepted planes of a patch and the union of their inliers"""

    index: Tuple[int, int]
    bounds: Tuple[float, float, float, float]
    fits: List[PlaneFit] = field(default_factory=list)

    def inliers(self) -> IndexArray:
        if not self.fits:
            return np.empty(0, dtype=np.int64)
        return np.unique(np.concatenate([f.inliers for f in self.fits]))


def in_detection_range(points: Nx3, cfg: RansacConfig) -> NDArray:
    r = cfg.detection_range
    p = np.asarray(points).reshape(-1, 3)
    return (
        (p[:, 0] >= r[0]) & (p[:, 0] <= r[1])
        & (p[:, 1] >= r[2]) & (p[:, 1] <= r[3])
        & (p[:, 2] >= r[4]) & (p[:, 2] <= r[5])
    )


def grid_index(values: NDArray, lo: float, step: float) -> IndexArray:
    """Cell index with boundary values going to the lower index"""
    return np.maximum(np.ceil((values - lo) / step).astype(np.int64) - 1, 0)


def partition_patches(cloud: PointCloud, cfg: RansacConfig) -> List[Patch]:
    """Split the in-range points into an (x, y) grid of patches

    :param cloud: the scene
    :type cloud: PointCloud
    :param cfg: patch size and detection range
    :type cfg: RansacConfig
    :return: nonempty patches ordered by (ix, iy)
    :rtype: List[Patch]
    """
    if cloud.is_empty():
        return []
    idx = np.flatnonzero(in_detection_range(cloud.points, cfg))
    if idx.size == 0:
        return []

    r = cfg.detection_range
    px, py = cfg.patch_size
    pts = cloud.points[idx]
    ix = grid_index(pts[:, 0], r[0], px)
    iy = grid_index(pts[:, 1], r[2], py)

    keys, inverse = np.unique(np.stack([ix, iy], axis=1), axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    patches = []
    for k, (i, j) in enumerate(keys):
        members = idx[inverse == k]
        x0, y0 = r[0] + i * px, r[2] + j * py
        patches.append(
            Patch((int(i), int(j)), (x0, x0 + px, y0, y0 + py), members, cloud.points[members])
        )
    return patches


def seed_mask(points: Nx3, voxel_size) -> NDArray:
    """Points that lie in the lowest occupied voxel of their (x, y) voxel column"""
    vox = np.floor(points / np.asarray(voxel_size)).astype(np.int64)
    _, column = np.unique(vox[:, :2], axis=0, return_inverse=True)
    column = column.reshape(-1)
    lowest = np.full(column.max() + 1, np.iinfo(np.int64).max)
    np.minimum.at(lowest, column, vox[:, 2])
    return vox[:, 2] == lowest[column]


def _sample_planes(seeds: Nx3, n: int, rng: np.random.Generator) -> Tuple[Nx3, NDArray]:
    """Upward normals and offsets of planes through n random seed triples

    Collinear triples are redrawn a bounded number of times.
    """
    m = seeds.shape[0]
    normals = np.zeros((n, 3))
    anchors = np.zeros((n, 3))
    valid = np.zeros(n, dtype=bool)
    todo = np.arange(n)
    for _ in range(MAX_REDRAWS):
        if todo.size == 0:
            break
        tri = seeds[rng.integers(0, m, size=(todo.size, 3))]
        cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        length = np.linalg.norm(cross, axis=1)
        good = length >= COLLINEAR_EPS
        normals[todo[good]] = cross[good] / length[good, None]
        anchors[todo[good]] = tri[good, 0]
        valid[todo[good]] = True
        todo = todo[~good]

    normals, anchors = normals[valid], anchors[valid]
    normals[normals[:, 2] < 0.0] *= -1.0
    return normals, np.einsum("ij,ij->i", normals, anchors)


def check_constraints(plane: Plane, points: Nx3, cfg: RansacConfig) -> Tuple[bool, NDArray]:
    """Evaluate the four plane constraints on a patch

    The plane must be tilted less than ``max_tilt``, have at least
    ``min_plane_points`` inliers, fewer below-plane points than
    ``max_below_fraction`` of its inliers, and a mean below-plane distance
    under ``max_below_mean_dist``.

    :return: acceptance and the inlier mask
    """
    dist = plane.signed_distance(points)
    inliers = np.abs(dist) <= cfg.inlier_threshold
    n_in = int(inliers.sum())
    below = dist < -cfg.inlier_threshold
    n_below = int(below.sum())
    below_mean = float(-dist[below].mean()) if n_below else 0.0
    ok = (
        plane.tilt() < cfg.max_tilt
        and n_in >= cfg.min_plane_points
        and n_below < cfg.max_below_fraction * n_in
        and below_mean < cfg.max_below_mean_dist
    )
    return ok, inliers


def ransac_plane(points: Nx3, seeds: Nx3, cfg: RansacConfig, rng: np.random.Generator) -> Optional[Tuple[Plane, NDArray]]:
    """One constrained RANSAC run sampling only from seed points

    Candidates tilted beyond ``max_tilt`` are skipped before inlier counting.
    The candidate with the most inliers (first on ties) is returned only if
    it passes :func:`check_constraints`.
    """
    if seeds.shape[0] < 3:
        return None
    normals, offsets = _sample_planes(seeds, cfg.iterations, rng)
    flat = np.degrees(np.arccos(np.clip(normals[:, 2], 0.0, 1.0))) < cfg.max_tilt
    normals, offsets = normals[flat], offsets[flat]
    if normals.shape[0] == 0:
        return None

    counts = (np.abs(points @ normals.T - offsets) <= cfg.inlier_threshold).sum(axis=0)
    best = int(np.argmax(counts))
    plane = Plane(normals[best], float(offsets[best]))
    ok, inliers = check_constraints(plane, points, cfg)
    return (plane, inliers) if ok else None


def fit_patch_ground(patch: Patch, cfg: RansacConfig, rng: np.random.Generator) -> Optional[PatchGround]:
    """Fit the ground of one patch

    After a first accepted plane, the constrained fit is rerun
    ``confirm_reruns`` more times; every rerun that passes the constraints
    again contributes its inliers.

    :param patch: a nonempty patch
    :type patch: Patch
    :param cfg: RANSAC parameters
    :type cfg: RansacConfig
    :param rng: the patch's generator
    :type rng: np.random.Generator
    :return: accepted planes with global inlier indices, None on rejection
    :rtype: PatchGround | None
    """
    seeds = patch.points[seed_mask(patch.points, cfg.voxel_size)]
    first = ransac_plane(patch.points, seeds, cfg, rng)
    if first is None:
        return None

    ground = PatchGround(patch.index, patch.bounds)
    for k in range(cfg.confirm_reruns + 1):
        result = first if k == 0 else ransac_plane(patch.points, seeds, cfg, rng)
        if result is None:
            continue
        plane, mask = result
        ground.fits.append(PlaneFit(plane, patch.indices[mask]))
    logger.debug(
        "patch %s: %d of %d confirmations accepted",
        patch.index,
        len(ground.fits) - 1,
        cfg.confirm_reruns,
    )
    return ground
