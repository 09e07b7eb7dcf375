from __future__ import annotations
from dataclasses import dataclass
from typing import Tuple
import math
import struct

import numpy as np

from hunterforge.tools.types import BoolRaster, FloatRaster, Nx2, IndexArray, NDArray
from hunterforge.tools.errors import GridMismatchError

_HEADER = struct.Struct("<5d2I")


@dataclass(frozen=True)
class BevGrid:
    """Bird's-eye-view raster over [x_min, x_max] x [y_min, y_max]

    Row index i runs along x and column index j along y. A coordinate on a
    cell's upper edge belongs to the lower cell.
    """

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    cell: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("grid extents must be increasing")
        if not self.cell > 0.0:
            raise ValueError("cell size must be positive")

    @classmethod
    def from_range(cls, detection_range, cell: float) -> BevGrid:
        r = detection_range
        return cls(float(r[0]), float(r[1]), float(r[2]), float(r[3]), float(cell))

    @property
    def shape(self) -> Tuple[int, int]:
        return (
            math.ceil((self.x_max - self.x_min) / self.cell),
            math.ceil((self.y_max - self.y_min) / self.cell),
        )

    def cell_centers(self) -> Tuple[FloatRaster, FloatRaster]:
        """(H', W') arrays of the x and y coordinates of cell centers"""
        H, W = self.shape
        x = self.x_min + (np.arange(H) + 0.5) * self.cell
        y = self.y_min + (np.arange(W) + 0.5) * self.cell
        return np.meshgrid(x, y, indexing="ij")

    def cell_of(self, xy: Nx2) -> Tuple[IndexArray, IndexArray, NDArray]:
        """Cell indices of (x, y) coordinates and whether they lie on the grid"""
        xy = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
        H, W = self.shape
        inside = (
            (xy[:, 0] >= self.x_min) & (xy[:, 0] <= self.x_max)
            & (xy[:, 1] >= self.y_min) & (xy[:, 1] <= self.y_max)
        )
        i = np.clip(np.ceil((xy[:, 0] - self.x_min) / self.cell).astype(np.int64) - 1, 0, H - 1)
        j = np.clip(np.ceil((xy[:, 1] - self.y_min) / self.cell).astype(np.int64) - 1, 0, W - 1)
        return i, j, inside

    def header(self) -> bytes:
        H, W = self.shape
        return _HEADER.pack(self.x_min, self.x_max, self.y_min, self.y_max, self.cell, H, W)

    @classmethod
    def from_header(cls, data: bytes) -> Tuple[BevGrid, int]:
        x0, x1, y0, y1, cell, H, W = _HEADER.unpack_from(data, 0)
        grid = cls(x0, x1, y0, y1, cell)
        if grid.shape != (H, W):
            raise ValueError("raster header dimensions disagree with its extents")
        return grid, _HEADER.size


def check_same_grid(a: BevGrid, b: BevGrid) -> None:
    if a != b:
        raise GridMismatchError(f"{a} and {b} differ")


@dataclass(frozen=True, eq=False)
class Mask:
    """Boolean raster on a BEV grid"""

    grid: BevGrid
    raster: BoolRaster

    def __post_init__(self):
        raster = np.asarray(self.raster, dtype=bool)
        if raster.shape != self.grid.shape:
            raise ValueError(f"mask shape {raster.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "raster", raster)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Mask):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.raster, other.raster)

    @classmethod
    def full(cls, grid: BevGrid, value: bool = True) -> Mask:
        return cls(grid, np.full(grid.shape, value, dtype=bool))

    def to_bytes(self) -> bytes:
        return self.grid.header() + np.packbits(self.raster, axis=None).tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> Mask:
        grid, offset = BevGrid.from_header(data)
        H, W = grid.shape
        bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8, offset=offset), count=H * W)
        return cls(grid, bits.reshape(H, W).astype(bool))

    def save(self, path) -> None:
        with open(path, "wb") as f:
            f.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> Mask:
        with open(path, "rb") as f:
            return cls.from_bytes(f.read())


@dataclass(frozen=True, eq=False)
class HeatmapGrid:
    """Real raster in [0, 1] on a BEV grid"""

    grid: BevGrid
    raster: FloatRaster

    def __post_init__(self):
        raster = np.asarray(self.raster, dtype=np.float64)
        if raster.shape != self.grid.shape:
            raise ValueError(f"heatmap shape {raster.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "raster", raster)

    @classmethod
    def zeros(cls, grid: BevGrid) -> HeatmapGrid:
        return cls(grid, np.zeros(grid.shape))

    def to_bytes(self) -> bytes:
        return self.grid.header() + self.raster.astype("<f4").tobytes(order="C")

    @classmethod
    def from_bytes(cls, data: bytes) -> HeatmapGrid:
        grid, offset = BevGrid.from_header(data)
        raster = np.frombuffer(data, dtype="<f4", offset=offset).reshape(grid.shape)
        return cls(grid, raster.astype(np.float64))

    def save(self, path) -> None:
        with open(path, "wb") as f:
            f.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> HeatmapGrid:
        with open(path, "rb") as f:
            return cls.from_bytes(f.read())
