from __future__ import annotations
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Optional
import json

import numpy as np

from hunterforge.tools.types import Nx3, NDArray, R3
from hunterforge.tools.linalg import RigidTransform
from hunterforge.tools.utils import wrap_angle
from hunterforge.geometry_core import PointCloud


class BodyPart(str, Enum):
    HEAD = "head"
    TRUNK = "trunk"
    LEFT_ARM = "left_arm"
    RIGHT_ARM = "right_arm"
    LEFT_LEG = "left_leg"
    RIGHT_LEG = "right_leg"


BODY_PARTS = tuple(BodyPart)


@dataclass(frozen=True, eq=False)
class HumanAsset:
    """A triangle mesh of a human with six labeled key joints

    :param vertices: (V, 3) mesh vertices in meters
    :type vertices: Nx3
    :param triangles: (T, 3) vertex indices
    :type triangles: NDArray
    :param joints: one position per :class:`BodyPart`
    :type joints: Dict[BodyPart, R3]
    :param yaw: facing direction in radians
    :type yaw: float
    :param asset_id: identifier recorded in frame provenance
    :type asset_id: str
    """

    vertices: Nx3
    triangles: NDArray
    joints: Dict[BodyPart, R3]
    yaw: float = 0.0
    asset_id: str = "asset"

    def __post_init__(self):
        vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if triangles.shape[0] < 1:
            raise ValueError("a human mesh needs at least one triangle")
        if triangles.min() < 0 or triangles.max() >= vertices.shape[0]:
            raise ValueError("triangle index out of range")

        joints = {BodyPart(k): np.asarray(v, dtype=np.float64).reshape(3) for k, v in self.joints.items()}
        if set(joints) != set(BODY_PARTS):
            missing = sorted(p.value for p in set(BODY_PARTS) - set(joints))
            raise ValueError(f"a human asset needs exactly six joints, missing {missing}")

        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "triangles", triangles)
        object.__setattr__(self, "joints", joints)
        object.__setattr__(self, "yaw", float(self.yaw))

    def __repr__(self) -> str:
        return (
            f"HumanAsset(id={self.asset_id!r}, vertices={len(self.vertices)}, "
            f"triangles={len(self.triangles)})"
        )

    def joint_array(self) -> Nx3:
        """(6, 3) joint positions in :data:`BODY_PARTS` order"""
        return np.vstack([self.joints[p] for p in BODY_PARTS])

    def vertex_cloud(self) -> PointCloud:
        return PointCloud(self.vertices)

    def posed(self, pose: RigidTransform) -> HumanAsset:
        """The asset moved by a rigid transform; yaw accumulates the z rotation"""
        R = pose.rotation
        return HumanAsset(
            pose * self.vertices,
            self.triangles,
            {p: pose * j for p, j in self.joints.items()},
            float(wrap_angle(self.yaw + np.arctan2(R[1, 0], R[0, 0]))),
            self.asset_id,
        )


def _obj_index(token: str, n_vertices: int) -> int:
    i = int(token.split("/")[0])
    return i - 1 if i > 0 else n_vertices + i


def read_obj(path) -> tuple:
    """Read the vertex and face records of an ASCII OBJ file

    Polygons with more than three corners are fan triangulated. Texture and
    normal indices are ignored.

    :return: vertices (V, 3) and triangles (T, 3)
    """
    vertices, triangles = [], []
    with open(path, "r") as f:
        for line in f:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                vertices.append([float(c) for c in parts[1:4]])
            elif parts[0] == "f":
                idx = [_obj_index(t, len(vertices)) for t in parts[1:]]
                for k in range(1, len(idx) - 1):
                    triangles.append([idx[0], idx[k], idx[k + 1]])
    return np.array(vertices, dtype=np.float64).reshape(-1, 3), np.array(triangles, dtype=np.int64).reshape(-1, 3)


def write_obj(path, vertices: Nx3, triangles: NDArray) -> None:
    with open(path, "w") as f:
        for v in vertices:
            f.write(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}\n")
        for t in triangles:
            f.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")


def sidecar_path(obj_path) -> Path:
    return Path(obj_path).with_suffix(".json")


def load_asset(obj_path, sidecar: Optional[str] = None) -> HumanAsset:
    """Load a human asset from an OBJ mesh and its joint sidecar JSON

    The sidecar holds ``{"joints": {part: [x, y, z]}, "yaw": float}`` and
    defaults to the mesh path with a ``.json`` suffix.
    """
    vertices, triangles = read_obj(obj_path)
    with open(sidecar or sidecar_path(obj_path), "r") as f:
        meta = json.load(f)
    return HumanAsset(
        vertices,
        triangles,
        meta["joints"],
        meta.get("yaw", 0.0),
        meta.get("asset_id", Path(obj_path).stem),
    )


def save_asset(asset: HumanAsset, obj_path) -> None:
    write_obj(obj_path, asset.vertices, asset.triangles)
    meta = {
        "joints": {p.value: asset.joints[p].tolist() for p in BODY_PARTS},
        "yaw": asset.yaw,
        "asset_id": asset.asset_id,
    }
    with open(sidecar_path(obj_path), "w") as f:
        json.dump(meta, f, indent=2)
