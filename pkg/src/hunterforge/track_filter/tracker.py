from __future__ import annotations
from dataclasses import dataclass, field
from enum import Enum
from itertools import count
from typing import List, Sequence, Tuple
import logging

import numpy as np
from scipy.spatial.distance import cdist, pdist

from hunterforge.geometry_core import BBox3D, bev_iou, center_distance
from hunterforge.track_filter.detection import Detection
from hunterforge.track_filter.kalman import TrackState, predict, update

logger = logging.getLogger(__name__)


@dataclass
class FilterConfig:
    """Parameters of the bi-directional pseudo-label filter

    :param min_confidence: detections below this score are dropped before tracking
    :param min_length: shortest kept tracklet in frames
    :param min_displacement: smallest kept tracklet extent in meters
    :param gate: association gate on center distance in meters
    :param merge_iou: same-frame pairs above this BEV IoU are duplicates
    :param merge_distance: same-frame pairs closer than this are duplicates
    :param check_relocation: apply the displacement rule (stationary sensors)
    :param process_noise_pos: process noise of the box parameters per frame
    :param process_noise_vel: process noise of the velocities per frame
    :param measurement_noise: measurement noise of the box parameters
    :param initial_velocity_var: velocity variance of a new tracklet
    """

    min_confidence: float = 0.5
    min_length: int = 3
    min_displacement: float = 2.0
    gate: float = 2.0
    merge_iou: float = 0.3
    merge_distance: float = 0.3
    check_relocation: bool = True
    process_noise_pos: float = 0.1
    process_noise_vel: float = 1.0
    measurement_noise: float = 0.05
    initial_velocity_var: float = 10.0

    def __post_init__(self):
        values = (
            self.min_confidence,
            self.min_length,
            self.min_displacement,
            self.gate,
            self.merge_iou,
            self.merge_distance,
            self.process_noise_pos,
            self.process_noise_vel,
            self.measurement_noise,
            self.initial_velocity_var,
        )
        if min(values) < 0:
            raise ValueError("filter thresholds must be non-negative")


class Direction(str, Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


class TrackStatus(str, Enum):
    ALIVE = "alive"
    CLOSED = "closed"


@dataclass
class Tracklet:
    id: int
    detections: List[Detection]
    state: TrackState
    status: TrackStatus = TrackStatus.ALIVE

    def __len__(self) -> int:
        return len(self.detections)

    def frames(self) -> List[int]:
        return [d.frame for d in self.detections]

    def displacement(self) -> float:
        """Largest distance between any two detection centers"""
        if len(self.detections) < 2:
            return 0.0
        return float(pdist(np.array([d.center for d in self.detections])).max())


@dataclass
class Association:
    matches: List[Tuple[int, int]] = field(default_factory=list)
    unmatched_predictions: List[int] = field(default_factory=list)
    unmatched_detections: List[int] = field(default_factory=list)


def associate(predictions: Sequence[BBox3D], detections: Sequence[Detection], cfg: FilterConfig) -> Association:
    """Greedy center-distance association

    Pairs within the gate are visited by ascending distance, ties broken by
    prediction index and then detection index; a pair is matched when
    neither member has been claimed.
    """
    result = Association()
    n_p, n_d = len(predictions), len(detections)
    claimed_p = np.zeros(n_p, dtype=bool)
    claimed_d = np.zeros(n_d, dtype=bool)

    if n_p and n_d:
        dist = cdist(
            np.array([p.center for p in predictions]),
            np.array([d.center for d in detections]),
        )
        pi, di = np.nonzero(dist <= cfg.gate)
        order = np.lexsort((di, pi, dist[pi, di]))
        for p, d in zip(pi[order], di[order]):
            if claimed_p[p] or claimed_d[d]:
                continue
            claimed_p[p] = claimed_d[d] = True
            result.matches.append((int(p), int(d)))

    result.unmatched_predictions = [int(i) for i in np.flatnonzero(~claimed_p)]
    result.unmatched_detections = [int(i) for i in np.flatnonzero(~claimed_d)]
    return result


def track_direction(frames: Sequence[Sequence[Detection]], direction: Direction, cfg: FilterConfig) -> List[Tracklet]:
    """Track a sequence in one temporal direction

    Tracklets without a match in a frame are closed at once. Backward
    tracklets are returned with their detections in increasing frame order.

    :param frames: per-frame detections ordered by frame
    :type frames: Sequence[Sequence[Detection]]
    :param direction: forward or backward in time
    :type direction: Direction
    :param cfg: filter parameters
    :type cfg: FilterConfig
    :return: all tracklets in creation order
    :rtype: List[Tracklet]
    """
    direction = Direction(direction)
    ordered = list(frames) if direction == Direction.FORWARD else list(reversed(frames))
    ids = count()
    alive: List[Tracklet] = []
    closed: List[Tracklet] = []

    for dets in ordered:
        dets = [d for d in dets if d.score >= cfg.min_confidence]
        predicted = [predict(t.state, cfg) for t in alive]
        assoc = associate([p[0] for p in predicted], dets, cfg)

        survivors = []
        for p, d in assoc.matches:
            track = alive[p]
            track.state = update(predicted[p][1], dets[d], cfg)
            track.detections.append(dets[d])
            survivors.append(track)
        for p in assoc.unmatched_predictions:
            alive[p].status = TrackStatus.CLOSED
            closed.append(alive[p])
        for d in assoc.unmatched_detections:
            survivors.append(Tracklet(next(ids), [dets[d]], TrackState.from_box(dets[d].box, cfg)))
        alive = sorted(survivors, key=lambda t: t.id)

    for track in alive:
        track.status = TrackStatus.CLOSED
    tracklets = sorted(closed + alive, key=lambda t: t.id)
    if direction == Direction.BACKWARD:
        for track in tracklets:
            track.detections.reverse()
    return tracklets


def keep_tracklet(track: Tracklet, cfg: FilterConfig) -> bool:
    if len(track) < cfg.min_length:
        return False
    return not cfg.check_relocation or track.displacement() >= cfg.min_displacement


def _is_duplicate(a: Detection, b: Detection, cfg: FilterConfig) -> bool:
    if a.key == b.key:
        return True
    return bev_iou(a.box, b.box) > cfg.merge_iou or center_distance(a.box, b.box) < cfg.merge_distance


def merge_directions(candidates: Sequence[Detection], n_frames: int, cfg: FilterConfig) -> List[List[Detection]]:
    """Greedy same-frame de-duplication by confidence, output per frame in
    input order"""
    ordered = sorted(candidates, key=lambda d: (-d.score, d.frame, d.index))
    kept: List[List[Detection]] = [[] for _ in range(n_frames)]
    for det in ordered:
        if any(_is_duplicate(det, other, cfg) for other in kept[det.frame]):
            continue
        kept[det.frame].append(det)
    return [sorted(frame, key=lambda d: d.index) for frame in kept]


def filter_labels(frames: Sequence[Sequence[Detection]], cfg: FilterConfig = None) -> List[List[Detection]]:
    """Remove temporally inconsistent pseudo-labels

    Both tracking directions keep the detections of tracklets that are long
    enough and, when ``cfg.check_relocation`` is set, that moved far enough.
    The two results are merged per frame, dropping duplicates in favour of the
    higher confidence.

    :param frames: per-frame detections; ``Detection.frame`` must equal the
        frame's position
    :type frames: Sequence[Sequence[Detection]]
    :param cfg: filter parameters
    :type cfg: FilterConfig
    :return: per-frame kept detections, a subset of the input
    :rtype: List[List[Detection]]
    """
    cfg = cfg or FilterConfig()
    for t, dets in enumerate(frames):
        if any(d.frame != t for d in dets):
            raise ValueError(f"detections of frame position {t} carry a different frame index")

    candidates = []
    for direction in Direction:
        tracklets = track_direction(frames, direction, cfg)
        kept = [t for t in tracklets if keep_tracklet(t, cfg)]
        logger.debug("%s: kept %d of %d tracklets", direction.value, len(kept), len(tracklets))
        for t in kept:
            candidates.extend(t.detections)

    out = merge_directions(candidates, len(frames), cfg)
    n_in = sum(len(f) for f in frames)
    n_out = sum(len(f) for f in out)
    logger.info("filter kept %d of %d detections", n_out, n_in)
    return out
