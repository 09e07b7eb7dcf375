from __future__ import annotations
from typing import List

import numpy as np

from hunterforge.tools.types import Nx2


def polygon_area(poly: Nx2) -> float:
    """Shoelace area of a simple polygon (positive for CCW vertex order)"""
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _intersect(p1, p2, q1, q2):
    """Intersection of the segment p1p2 with the infinite line q1q2"""
    d1 = p2 - p1
    d2 = q2 - q1
    denom = d1[0] * d2[1] - d1[1] * d2[0]
    t = ((q1[0] - p1[0]) * d2[1] - (q1[1] - p1[1]) * d2[0]) / denom
    return p1 + t * d1


def clip_convex_polygon(subject: Nx2, clip: Nx2) -> Nx2:
    """Clip `subject` by the convex polygon `clip` (Sutherland-Hodgman)

    Both polygons must list their vertices in counter-clockwise order.

    :param subject: polygon to be clipped
    :type subject: Nx2
    :param clip: convex clipping polygon
    :type clip: Nx2
    :return: the intersection polygon (possibly empty)
    :rtype: Nx2
    """
    output: List[np.ndarray] = [np.asarray(p, dtype=np.float64) for p in subject]
    n = len(clip)
    for k in range(n):
        if not output:
            break
        c1 = clip[k]
        c2 = clip[(k + 1) % n]
        current, output = output, []
        s = current[-1]
        for e in current:
            e_in = _cross(c1, c2, e) >= 0.0
            s_in = _cross(c1, c2, s) >= 0.0
            if e_in:
                if not s_in:
                    output.append(_intersect(s, e, c1, c2))
                output.append(e)
            elif s_in:
                output.append(_intersect(s, e, c1, c2))
            s = e
    if not output:
        return np.empty((0, 2))
    return np.array(output)


def convex_intersection_area(a: Nx2, b: Nx2) -> float:
    """Area of the intersection of two CCW convex polygons"""
    inter = clip_convex_polygon(a, b)
    return max(polygon_area(inter), 0.0)


def points_in_rotated_rect(xy: Nx2, center, length: float, width: float, yaw: float):
    """Boolean mask of 2-D points inside a rectangle rotated by yaw"""
    c, s = np.cos(yaw), np.sin(yaw)
    d = np.asarray(xy, dtype=np.float64) - np.asarray(center, dtype=np.float64)[:2]
    u = d[..., 0] * c + d[..., 1] * s
    v = -d[..., 0] * s + d[..., 1] * c
    return (np.abs(u) <= 0.5 * length) & (np.abs(v) <= 0.5 * width)
