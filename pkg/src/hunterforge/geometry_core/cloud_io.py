from __future__ import annotations

import numpy as np

from hunterforge.geometry_core.point_cloud import PointCloud


def read_bin(path, extra_as_source: bool = False) -> PointCloud:
    """Read a packed little-endian float32 cloud with four values per point

    :param path: the ``.bin`` file
    :param extra_as_source: interpret the fourth value as a source tag
        instead of discarding it (KITTI intensity)
    :type extra_as_source: bool
    :return: the cloud in double precision
    :rtype: PointCloud
    """
    raw = np.fromfile(path, dtype="<f4")
    if raw.size % 4:
        raise ValueError(f"{path}: size is not a multiple of 4 floats")
    raw = raw.reshape(-1, 4)
    points = raw[:, :3].astype(np.float64)
    if extra_as_source:
        return PointCloud(points, source=np.rint(raw[:, 3]).astype(np.int8))
    return PointCloud(points)


def write_bin(path, cloud: PointCloud) -> None:
    """Write (x, y, z, extra) float32 records; extra is the source tag or 0"""
    out = np.zeros((len(cloud), 4), dtype="<f4")
    out[:, :3] = cloud.points
    if cloud.source is not None:
        out[:, 3] = cloud.source
    out.tofile(path)


def read_xyz(path) -> PointCloud:
    """Read an ASCII cloud, one point per line; columns after z are ignored"""
    data = np.loadtxt(path, dtype=np.float64, ndmin=2, comments="#")
    if data.size == 0:
        return PointCloud.empty()
    return PointCloud(data[:, :3])


def read_cloud(path, extra_as_source: bool = False) -> PointCloud:
    """Read a cloud by extension: ``.bin`` packed floats, anything else ASCII xyz"""
    if str(path).lower().endswith(".bin"):
        return read_bin(path, extra_as_source)
    return read_xyz(path)
