from __future__ import annotations
import numpy as np

from colorama import Fore, Style

from hunterforge.tools.types import ArrayLike3, NDArray, R3, R3x3, R4x4

ORTHONORMAL_TOL = 1e-9


def unit_vector(vec: NDArray) -> NDArray:
    """Returns the vector of unit magnitude in the direction of vec

    :param vec: the vector to normalize
    :type vec: NDArray
    :return: vector in the direction of `vec` with magnitude 1
    :rtype: NDArray
    """
    return vec / np.linalg.norm(vec)


def rotz(theta: float) -> R3x3:
    """Construct a new SO(3) matrix from a pure Z-axis rotation

    :param theta: rotation angle about the Z-axis
    :type theta: float
    :return: SO(3) rotation
    :rtype: R3x3
    """
    ct, st = np.cos(theta), np.sin(theta)
    # fmt: off
    R = np.array([[ct, -st, 0.],
                  [st,  ct, 0.],
                  [0.,  0., 1.]])
    # fmt: on
    return R


def is_rotation(matrix: R3x3, tol: float = ORTHONORMAL_TOL) -> bool:
    """True if matrix is orthonormal with determinant +1 within tol"""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape != (3, 3):
        return False
    ortho = np.allclose(matrix @ matrix.T, np.eye(3), rtol=0.0, atol=tol)
    return bool(ortho and abs(np.linalg.det(matrix) - 1.0) <= tol)


class RigidTransform:
    """
    A rigid body motion in three dimensions stored as a 4x4 homogeneous
    transformation matrix. The rotation block must be orthonormal with
    determinant +1.

    Transforms compose with ``@`` and act on point sets with ``*``
    (a single 3-vector or an (N, 3) array of points).
    """

    def __init__(self, matrix: R4x4 | None = None):
        if matrix is None:
            matrix = np.eye(4, dtype=np.float64)
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.shape != (4, 4):
            raise ValueError("Matrix shape is not 4x4")
        if not is_rotation(matrix[:3, :3]):
            raise ValueError("Rotation block is not a proper rotation")

        self.data: R4x4 = matrix

    @property
    def matrix(self) -> R4x4:
        """The homogeneous transformation matrix

        :return: An array view of the 4x4 homogeneous transformation
        :rtype: R4x4
        """
        return self.data

    @property
    def translation(self) -> R3:
        """Translation component

        :return: An array view of the R3 translation
        :rtype: R3
        """
        return self.data[:3, 3]

    @property
    def rotation(self) -> R3x3:
        """Rotational component

        :return: A matrix view of the SO(3) rotation
        :rtype: R3x3
        """
        return self.data[:3, :3]

    def __str__(self) -> str:
        out = f"{Style.BRIGHT}"
        col_maxes = [max([len(("{:g}").format(x)) for x in col]) for col in self.data.T]
        out_fmt = lambda i, j: ("{:" + str(col_maxes[j]) + "g}").format(self.data[i, j])
        for i in range(3):
            out += f"{Fore.RED}" + "".join([out_fmt(i, j) + "  " for j in range(3)])
            out += f"{Fore.BLUE}{out_fmt(i, 3)}\n"
        out += (
            f"{Fore.RESET}" + "".join([out_fmt(3, j) + "  " for j in range(4)]) + "\n"
        )
        out += f"{Style.RESET_ALL}"
        return out

    def __repr__(self) -> str:
        return f"RigidTransform(t={self.translation.tolist()})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, RigidTransform):
            return NotImplemented
        return bool(np.all(self.data == other.data))

    def __mul__(self, other):
        if isinstance(other, RigidTransform):
            return self.__class__(self.matrix @ other.matrix)

        if isinstance(other, np.ndarray):
            if other.shape[-1] == 3:
                return other @ self.rotation.T + self.translation
            raise ValueError("bad operands")
        return NotImplemented

    def __matmul__(self, other):
        if isinstance(other, RigidTransform):
            return self.__class__(self.matrix @ other.matrix)
        raise ValueError("@ only applies to pose composition")

    def almost_equal(self, other: RigidTransform, rtol=1e-05, atol=1e-08) -> bool:
        return bool(np.all(np.isclose(self.matrix, other.matrix, rtol=rtol, atol=atol)))

    def copy(self) -> RigidTransform:
        return RigidTransform(self.data.copy())

    def inv(self) -> RigidTransform:
        """Find the inverse transformation

        :return: inverse transformation
        :rtype: RigidTransform
        """
        inv = np.eye(4)
        inv[:3, :3] = self.rotation.T
        inv[:3, 3] = -self.rotation.T @ self.translation
        return RigidTransform(inv)

    @classmethod
    def Trans(
        cls, x: float | ArrayLike3, y: float | None = None, z: float | None = None
    ) -> RigidTransform:
        """Construct a new transform from a pure translation

        :param x: the x value of the translation (if float) or a 3 vector position (if ArrayLike3)
        :type x: float or ArrayLike3
        :param y: the y value of the translation
        :type y: float
        :param z: the z value of the translation
        :type z: float
        :return: pure translation
        :rtype: RigidTransform
        """
        new = np.eye(4)
        if y is None and z is None:
            new[:3, 3] = np.asarray(x, dtype=np.float64)
        else:
            new[:3, 3] = np.array([x, y, z], dtype=np.float64)
        return cls(new)

    @classmethod
    def Rz(cls, theta: float) -> RigidTransform:
        """Construct a new transform from a Z-axis rotation

        :param theta: rotation angle about the Z-axis
        :type theta: float
        :return: pure rotation
        :rtype: RigidTransform
        """
        new = np.eye(4)
        new[:3, :3] = rotz(theta)
        return cls(new)

    @classmethod
    def from_yaw_translation(cls, yaw: float, translation: ArrayLike3) -> RigidTransform:
        """Rotation about z by `yaw` followed by a translation"""
        new = np.eye(4)
        new[:3, :3] = rotz(yaw)
        new[:3, 3] = np.asarray(translation, dtype=np.float64)
        return cls(new)
