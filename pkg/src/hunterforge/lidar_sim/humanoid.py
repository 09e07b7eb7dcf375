from __future__ import annotations
from typing import List, Tuple

import numpy as np

from hunterforge.tools.types import Nx3, NDArray, R3
from hunterforge.tools.linalg import RigidTransform, unit_vector
from hunterforge.lidar_sim.human_asset import BodyPart, HumanAsset

REFERENCE_HEIGHT = 1.75


def _uv_sphere(n_lat: int, n_lon: int) -> Tuple[Nx3, NDArray]:
    """Unit sphere with poles on the z axis"""
    theta = np.linspace(0.0, np.pi, n_lat + 1)[1:-1]
    phi = np.linspace(0.0, 2.0 * np.pi, n_lon, endpoint=False)
    t, p = np.meshgrid(theta, phi, indexing="ij")
    ring = np.stack([np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)], axis=-1)
    vertices = np.vstack([[0.0, 0.0, 1.0], ring.reshape(-1, 3), [0.0, 0.0, -1.0]])

    tris = []
    top, bottom = 0, len(vertices) - 1
    idx = lambda i, j: 1 + i * n_lon + (j % n_lon)
    for j in range(n_lon):
        tris.append([top, idx(0, j), idx(0, j + 1)])
        tris.append([bottom, idx(n_lat - 2, j + 1), idx(n_lat - 2, j)])
    for i in range(n_lat - 2):
        for j in range(n_lon):
            a, b = idx(i, j), idx(i, j + 1)
            c, d = idx(i + 1, j), idx(i + 1, j + 1)
            tris.append([a, c, b])
            tris.append([b, c, d])
    return vertices, np.array(tris, dtype=np.int64)


def ellipsoid(center: R3, radii: R3, resolution: int = 12) -> Tuple[Nx3, NDArray]:
    vertices, triangles = _uv_sphere(resolution, 2 * resolution)
    return vertices * np.asarray(radii) + np.asarray(center), triangles


def capsule(start: R3, end: R3, radius: float, resolution: int = 12) -> Tuple[Nx3, NDArray]:
    """A cylinder with hemispherical caps around the segment start-end"""
    start, end = np.asarray(start, dtype=np.float64), np.asarray(end, dtype=np.float64)
    vertices, triangles = _uv_sphere(resolution, 2 * resolution)
    half = 0.5 * np.linalg.norm(end - start)
    vertices = vertices * radius
    vertices[:, 2] += np.where(vertices[:, 2] >= 0.0, half, -half)

    # rotate the local z axis onto the segment direction
    axis = unit_vector(end - start)
    z = np.array([0.0, 0.0, 1.0])
    v = np.cross(z, axis)
    c = float(np.dot(z, axis))
    if np.linalg.norm(v) < 1e-12:
        R = np.eye(3) if c > 0 else np.diag([1.0, -1.0, -1.0])
    else:
        vx = np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])
        R = np.eye(3) + vx + vx @ vx / (1.0 + c)
    return vertices @ R.T + 0.5 * (start + end), triangles


def combine_meshes(parts: List[Tuple[Nx3, NDArray]]) -> Tuple[Nx3, NDArray]:
    """Concatenate (vertices, triangles) meshes, offsetting the triangle indices"""
    if not parts:
        return np.empty((0, 3)), np.empty((0, 3), dtype=np.int64)
    vertices, triangles, offset = [], [], 0
    for v, t in parts:
        vertices.append(v)
        triangles.append(t + offset)
        offset += len(v)
    return np.vstack(vertices), np.vstack(triangles)


def make_humanoid(
    height: float = REFERENCE_HEIGHT,
    arm_swing: float = 0.0,
    leg_swing: float = 0.0,
    yaw: float = 0.0,
    asset_id: str = "humanoid",
    resolution: int = 8,
) -> HumanAsset:
    """Build a procedural humanoid standing on z = 0 and facing +x

    Legs and arms are capsules, head and trunk are ellipsoids. Limbs swing
    about the hips and shoulders in the sagittal plane, left and right in
    opposite directions.

    :param height: body height in meters, typically 1.5 to 1.9
    :type height: float
    :param arm_swing: shoulder swing angle in radians
    :type arm_swing: float
    :param leg_swing: hip swing angle in radians
    :type leg_swing: float
    :param yaw: heading about z in radians
    :type yaw: float
    :param asset_id: identifier of the asset
    :type asset_id: str
    :param resolution: latitude rings per primitive
    :type resolution: int
    :return: the humanoid asset
    :rtype: HumanAsset
    """
    if height <= 0.0:
        raise ValueError("height must be positive")
    s = height / REFERENCE_HEIGHT
    leg_r, arm_r = 0.07 * s, 0.05 * s
    leg_len = 0.9 * s - leg_r
    arm_len = 0.65 * s

    def limb(root, angle, length):
        return root + length * np.array([np.sin(angle), 0.0, -np.cos(angle)])

    hips = {BodyPart.LEFT_LEG: (0.1 * s, leg_swing), BodyPart.RIGHT_LEG: (-0.1 * s, -leg_swing)}
    shoulders = {BodyPart.LEFT_ARM: (0.25 * s, -arm_swing), BodyPart.RIGHT_ARM: (-0.25 * s, arm_swing)}

    trunk_c = np.array([0.0, 0.0, 1.2 * s])
    head_c = np.array([0.0, 0.0, 1.62 * s])
    parts = [
        ellipsoid(trunk_c, np.array([0.12, 0.2, 0.3]) * s, resolution),
        ellipsoid(head_c, np.array([0.1, 0.09, 0.12]) * s, resolution),
    ]
    joints = {BodyPart.TRUNK: trunk_c, BodyPart.HEAD: head_c}

    for part, (y, angle) in hips.items():
        hip = np.array([0.0, y, 0.9 * s])
        foot = limb(hip, angle, leg_len)
        parts.append(capsule(hip, foot, leg_r, resolution))
        joints[part] = 0.5 * (hip + foot)
    for part, (y, angle) in shoulders.items():
        shoulder = np.array([0.0, y, 1.45 * s])
        hand = limb(shoulder, angle, arm_len)
        parts.append(capsule(shoulder, hand, arm_r, resolution))
        joints[part] = 0.5 * (shoulder + hand)

    vertices, triangles = combine_meshes(parts)
    asset = HumanAsset(vertices, triangles, joints, 0.0, asset_id)
    if yaw != 0.0:
        asset = asset.posed(RigidTransform.Rz(yaw))
    return asset


def humanoid_pool(n: int, rng: np.random.Generator, resolution: int = 8) -> List[HumanAsset]:
    """Random humanoids with heights in [1.5, 1.9] m and walking poses"""
    pool = []
    for k in range(n):
        swing = rng.uniform(-0.5, 0.5)
        pool.append(
            make_humanoid(
                height=rng.uniform(1.5, 1.9),
                arm_swing=swing,
                leg_swing=0.8 * swing,
                asset_id=f"humanoid_{k:03d}",
                resolution=resolution,
            )
        )
    return pool
