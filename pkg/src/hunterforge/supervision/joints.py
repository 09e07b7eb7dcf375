from __future__ import annotations
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from scipy.spatial import cKDTree

from hunterforge.tools.types import R3
from hunterforge.geometry_core import PointCloud
from hunterforge.lidar_sim import BodyPart, BODY_PARTS
from hunterforge.supervision.masks import MaskConfig


@dataclass
class JointState:
    part: BodyPart
    position: R3
    visible: bool
    n_points: int


@dataclass
class JointSet:
    """Visibility of the six key joints of one instance"""

    joints: List[JointState] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.joints)

    def __getitem__(self, part) -> JointState:
        part = BodyPart(part)
        for j in self.joints:
            if j.part == part:
                return j
        raise KeyError(part)

    def visible(self) -> List[BodyPart]:
        return [j.part for j in self.joints if j.visible]

    def to_dict(self) -> dict:
        return {
            j.part.value: {"position": np.asarray(j.position).tolist(), "visible": j.visible, "n_points": j.n_points}
            for j in self.joints
        }


def visible_joints(joints: Dict[BodyPart, R3], points: PointCloud, cfg: Optional[MaskConfig] = None) -> JointSet:
    """Flag joints supported by at least ``cfg.joint_min_points`` instance points

    A point supports a joint when it lies within the part's radius of the
    joint position.

    :param joints: the six joint positions
    :type joints: Dict[BodyPart, R3]
    :param points: the instance's visible points
    :type points: PointCloud
    :param cfg: radii and point minimum
    :type cfg: MaskConfig, optional
    :return: the joint set
    :rtype: JointSet
    """
    cfg = cfg or MaskConfig()
    joints = {BodyPart(k): np.asarray(v, dtype=np.float64) for k, v in joints.items()}
    tree = cKDTree(points.points) if not points.is_empty() else None

    states = []
    for part in BODY_PARTS:
        pos = joints[part]
        count = 0
        if tree is not None:
            count = int(tree.query_ball_point(pos, cfg.joint_radii[part.value], return_length=True))
        states.append(JointState(part, pos, count >= cfg.joint_min_points, count))
    return JointSet(states)
