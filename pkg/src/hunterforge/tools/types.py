from typing import Tuple, Union, List

from numpy import floating, integer, bool_
from numpy.typing import NDArray

ArrayLike = Union[List[float], Tuple[float, ...], NDArray]
ArrayLike2 = Union[List[float], Tuple[float, float], NDArray]
ArrayLike3 = Union[List[float], Tuple[float, float, float], NDArray]

# real vectors
R2 = NDArray[floating]  # R^2
R3 = NDArray[floating]  # R^3

# real matrices
R3x3 = NDArray[floating]  # R^{3x3} matrix
R4x4 = NDArray[floating]  # R^{4x4} matrix
R10x10 = NDArray[floating]  # R^{10x10} matrix

# point sets and rasters
Nx2 = NDArray[floating]  # N two dimensional points
Nx3 = NDArray[floating]  # N three dimensional points
IndexArray = NDArray[integer]
BoolRaster = NDArray[bool_]
FloatRaster = NDArray[floating]
