from __future__ import annotations
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from hunterforge.geometry_core import BBox3D
from hunterforge.track_filter import Detection

RECALL_POINTS = np.linspace(0.0, 1.0, 101)

STATUS_OK = "ok"
STATUS_EMPTY = "empty"
STATUS_NO_GT = "no-ground-truth"


@dataclass
class EvalConfig:
    """Evaluation parameters

    :param thresholds: center-distance thresholds D in meters, ascending
    :param nms_radius: circle NMS radius in meters
    :param apply_nms: run circle NMS on the detections before matching
    :param detection_range: (x_min, x_max, y_min, y_max, z_min, z_max) crop of
        box centers, no crop when None
    :param score_floor: detections below this score are ignored
    :param score_threshold: score cut of the thresholded precision/recall
    """

    thresholds: Tuple[float, ...] = (0.25, 0.5, 1.0)
    nms_radius: float = 0.2
    apply_nms: bool = False
    detection_range: Optional[Tuple[float, float, float, float, float, float]] = None
    score_floor: float = 0.0
    score_threshold: float = 0.5
    interpolation: str = "101-point"

    def __post_init__(self):
        self.thresholds = tuple(float(d) for d in self.thresholds)
        if not self.thresholds or min(self.thresholds) <= 0.0:
            raise ValueError("distance thresholds must be positive")
        if list(self.thresholds) != sorted(self.thresholds):
            raise ValueError("distance thresholds must be ascending")
        if self.nms_radius < 0.0:
            raise ValueError("nms radius must be non-negative")
        if self.detection_range is not None:
            self.detection_range = tuple(float(v) for v in self.detection_range)


def circle_nms(dets: Sequence[Detection], radius: float) -> List[Detection]:
    """Keep a detection when its BEV center is at least ``radius`` from every
    higher ranked kept center; ranking is by score, then input position"""
    order = sorted(range(len(dets)), key=lambda k: (-dets[k].score, k))
    kept: List[Detection] = []
    kept_xy = np.empty((0, 2))
    for k in order:
        xy = dets[k].center[:2]
        if kept_xy.shape[0] and np.min(np.hypot(*(kept_xy - xy).T)) < radius:
            continue
        kept.append(dets[k])
        kept_xy = np.vstack([kept_xy, xy])
    return kept


def match_frame(dets: Sequence[Detection], gts: Sequence[BBox3D], D: float) -> np.ndarray:
    """True-positive flags of detections sorted by descending confidence

    Each detection takes the nearest unmatched ground truth whose center is
    closer than D.
    """
    flags = np.zeros(len(dets), dtype=bool)
    if not dets or not gts:
        return flags
    gt_centers = np.array([g.center for g in gts])
    taken = np.zeros(len(gts), dtype=bool)
    for k, det in enumerate(dets):
        dist = np.linalg.norm(gt_centers - det.center, axis=1)
        dist[taken] = np.inf
        best = int(np.argmin(dist))
        if dist[best] < D:
            taken[best] = True
            flags[k] = True
    return flags


def average_precision(tp: np.ndarray, scores: np.ndarray, n_gt: int, order=None) -> Tuple[float, str]:
    """101-point interpolated average precision of pooled detections

    :param tp: true-positive flag of every pooled detection
    :param scores: their confidences
    :param n_gt: number of ground truths
    :param order: pooled ranking, descending score when omitted
    :return: the AP and a status (``"ok"``, ``"empty"`` or ``"no-ground-truth"``)
    """
    tp = np.asarray(tp, dtype=bool)
    if n_gt == 0:
        return 0.0, STATUS_EMPTY if tp.size == 0 else STATUS_NO_GT
    if tp.size == 0:
        return 0.0, STATUS_OK
    if order is None:
        order = np.argsort(-np.asarray(scores), kind="stable")
    hits = tp[order]
    tp_cum = np.cumsum(hits)
    fp_cum = np.cumsum(~hits)
    recall = tp_cum / n_gt
    precision = tp_cum / (tp_cum + fp_cum)

    interpolated = np.zeros(len(RECALL_POINTS))
    for i, r in enumerate(RECALL_POINTS):
        above = recall >= r
        if np.any(above):
            interpolated[i] = precision[above].max()
    return float(interpolated.mean()), STATUS_OK


@dataclass
class ThresholdStats:
    distance: float
    ap: float
    precision: float
    recall: float
    n_tp: int
    status: str
    thresholded_precision: float = 0.0
    thresholded_recall: float = 0.0
