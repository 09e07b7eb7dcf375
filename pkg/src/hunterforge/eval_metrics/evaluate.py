from __future__ import annotations
from typing import Dict, Mapping, Optional, Sequence, Union

import numpy as np

from hunterforge.tools.errors import FrameMismatchError
from hunterforge.geometry_core import BBox3D
from hunterforge.track_filter import Detection, DetectionFrame
from hunterforge.eval_metrics.metrics import (
    EvalConfig,
    ThresholdStats,
    circle_nms,
    match_frame,
    average_precision,
)
from hunterforge.eval_metrics.report import MetricsReport


def _in_range(center, detection_range) -> bool:
    if detection_range is None:
        return True
    r = detection_range
    return r[0] <= center[0] <= r[1] and r[2] <= center[1] <= r[3] and r[4] <= center[2] <= r[5]


FramesLike = Union[Sequence[DetectionFrame], Mapping[str, Sequence]]


def _as_mapping(frames: FramesLike) -> Dict[str, list]:
    if isinstance(frames, Mapping):
        return {str(k): list(v) for k, v in frames.items()}
    out = {}
    for f in frames:
        if f.frame_id in out:
            raise FrameMismatchError(f"frame id '{f.frame_id}' appears twice")
        out[f.frame_id] = list(f.detections)
    return out


def _gt_box(g) -> BBox3D:
    return g.box if isinstance(g, Detection) else g


def evaluate(dets: FramesLike, gts: FramesLike, cfg: Optional[EvalConfig] = None) -> MetricsReport:
    """Center-distance AP, precision and recall at every threshold

    :param dets: detections per frame id
    :param gts: ground-truth boxes (or detections) per frame id
    :param cfg: evaluation parameters
    :type cfg: EvalConfig, optional
    :raises FrameMismatchError: if the frame ids of the two sides differ
    :return: the report
    :rtype: MetricsReport
    """
    cfg = cfg or EvalConfig()
    det_map, gt_map = _as_mapping(dets), _as_mapping(gts)
    if set(det_map) != set(gt_map):
        missing = sorted(set(det_map) ^ set(gt_map))
        raise FrameMismatchError(f"frame ids differ: {missing[:5]}")

    frames = sorted(det_map)
    prepared = {}
    n_gt = n_det = 0
    for fid in frames:
        frame_dets = [d for d in det_map[fid] if d.score >= cfg.score_floor and _in_range(d.center, cfg.detection_range)]
        if cfg.apply_nms:
            frame_dets = circle_nms(frame_dets, cfg.nms_radius)
        frame_dets = sorted(frame_dets, key=lambda d: (-d.score, d.index))
        frame_gts = [_gt_box(g) for g in gt_map[fid] if _in_range(_gt_box(g).center, cfg.detection_range)]
        prepared[fid] = (frame_dets, frame_gts)
        n_gt += len(frame_gts)
        n_det += len(frame_dets)

    pooled_keys = [(-d.score, fid, d.index) for fid in frames for d in prepared[fid][0]]
    scores = np.array([-k[0] for k in pooled_keys])
    order = np.array(sorted(range(len(pooled_keys)), key=pooled_keys.__getitem__), dtype=np.int64)
    above_cut = scores >= cfg.score_threshold

    stats = []
    for D in cfg.thresholds:
        tp = np.concatenate(
            [match_frame(*prepared[fid], D) for fid in frames] or [np.zeros(0, dtype=bool)]
        )
        ap, status = average_precision(tp, scores, n_gt, order)
        n_tp = int(tp.sum())
        n_tp_cut = int(tp[above_cut].sum())
        n_cut = int(above_cut.sum())
        stats.append(
            ThresholdStats(
                D,
                ap,
                n_tp / n_det if n_det else 0.0,
                n_tp / n_gt if n_gt else 0.0,
                n_tp,
                status,
                n_tp_cut / n_cut if n_cut else 0.0,
                n_tp_cut / n_gt if n_gt else 0.0,
            )
        )
    return MetricsReport.from_stats(stats, n_gt, n_det, len(frames), cfg)
