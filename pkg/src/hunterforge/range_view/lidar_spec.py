from __future__ import annotations
from dataclasses import dataclass, field, asdict
from typing import Tuple

import numpy as np

from hunterforge.tools.types import Nx3, NDArray


def _bin_index(values: NDArray, lo: float, step: float, n: int) -> NDArray:
    """Uniform binning where a value on a bin's upper edge goes to the lower bin"""
    idx = np.ceil((values - lo) / step).astype(np.int64) - 1
    return np.clip(idx, 0, n - 1)


@dataclass(frozen=True)
class LidarSpec:
    """Beam layout of a spinning LiDAR

    :param n_rows: beam count H; row 0 is the highest beam
    :type n_rows: int
    :param n_cols: azimuth bins W over [-180, 180) degrees
    :type n_cols: int
    :param min_elev: lowest elevation of the vertical field of view (degrees)
    :type min_elev: float
    :param max_elev: highest elevation of the vertical field of view (degrees)
    :type max_elev: float
    :param max_range: maximum measured range in meters
    :type max_range: float
    :param origin: sensor origin in the cloud frame
    :type origin: Tuple[float, float, float]
    """

    n_rows: int = 128
    n_cols: int = 2048
    min_elev: float = -22.5
    max_elev: float = 22.5
    max_range: float = 120.0
    origin: Tuple[float, float, float] = field(default=(0.0, 0.0, 0.0))

    def __post_init__(self):
        if self.n_rows < 1 or self.n_cols < 1:
            raise ValueError("LidarSpec needs at least one row and one column")
        if not self.max_range > 0.0:
            raise ValueError("max_range must be positive")
        if not self.min_elev < self.max_elev:
            raise ValueError("min_elev must be below max_elev")
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))

    @classmethod
    def hucenlife(cls, n_cols: int = 2048) -> LidarSpec:
        """128 beams with a 45 degree vertical field of view"""
        return cls(n_rows=128, n_cols=n_cols, min_elev=-22.5, max_elev=22.5, max_range=120.0)

    @classmethod
    def toy(cls) -> LidarSpec:
        """A coarse desk-scale sensor used by the bundled toy dataset"""
        return cls(n_rows=32, n_cols=512, min_elev=-25.0, max_elev=15.0, max_range=60.0)

    @classmethod
    def from_dict(cls, d: dict) -> LidarSpec:
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.n_rows, self.n_cols)

    @property
    def elevation_step(self) -> float:
        return (self.max_elev - self.min_elev) / self.n_rows

    @property
    def azimuth_step(self) -> float:
        return 360.0 / self.n_cols

    def spherical(self, points: Nx3) -> Tuple[NDArray, NDArray, NDArray]:
        """Range, elevation and azimuth (degrees) of points relative to the origin"""
        rel = np.asarray(points, dtype=np.float64).reshape(-1, 3) - np.asarray(self.origin)
        horiz = np.hypot(rel[:, 0], rel[:, 1])
        ranges = np.sqrt(horiz * horiz + rel[:, 2] * rel[:, 2])
        elev = np.degrees(np.arctan2(rel[:, 2], horiz))
        azim = np.degrees(np.arctan2(rel[:, 1], rel[:, 0]))
        return ranges, elev, azim

    def cell_index(self, points: Nx3) -> Tuple[NDArray, NDArray, NDArray, NDArray]:
        """Map points to range image cells

        :return: rows, cols, ranges and a validity mask; points outside the
            vertical field of view, beyond max_range or at the origin are invalid
        """
        ranges, elev, azim = self.spherical(points)
        valid = (
            (ranges > 0.0)
            & (ranges <= self.max_range)
            & (elev >= self.min_elev)
            & (elev <= self.max_elev)
        )
        k = _bin_index(elev, self.min_elev, self.elevation_step, self.n_rows)
        rows = self.n_rows - 1 - k
        cols = _bin_index(azim, -180.0, self.azimuth_step, self.n_cols)
        return rows, cols, ranges, valid

    def row_elevations(self) -> NDArray:
        """Bin-center elevation (degrees) of every row"""
        k = self.n_rows - 1 - np.arange(self.n_rows)
        return self.min_elev + (k + 0.5) * self.elevation_step

    def col_azimuths(self) -> NDArray:
        """Bin-center azimuth (degrees) of every column"""
        return -180.0 + (np.arange(self.n_cols) + 0.5) * self.azimuth_step

    def beam_directions(self, rows: NDArray | None = None, cols: NDArray | None = None) -> NDArray:
        """Unit ray directions through bin centers

        :return: (len(rows), len(cols), 3) directions, all cells by default
        """
        elev = np.radians(self.row_elevations())
        azim = np.radians(self.col_azimuths())
        if rows is not None:
            elev = elev[rows]
        if cols is not None:
            azim = azim[cols]
        e, a = np.meshgrid(elev, azim, indexing="ij")
        return np.stack([np.cos(e) * np.cos(a), np.cos(e) * np.sin(a), np.sin(e)], axis=-1)
