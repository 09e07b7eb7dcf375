from __future__ import annotations
from dataclasses import dataclass, field
from typing import Dict, List, Sequence
import json

import numpy as np

from hunterforge.geometry_core import BBox3D


@dataclass(frozen=True)
class Detection:
    """A scored box

    :param frame: position of the frame within its sequence
    :type frame: int
    :param box: the detected box
    :type box: BBox3D
    :param score: confidence in [0, 1]
    :type score: float
    :param index: position of the detection within its frame
    :type index: int
    """

    frame: int
    box: BBox3D
    score: float = 1.0
    index: int = 0

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"confidence {self.score} is outside [0, 1]")

    @property
    def key(self):
        return (self.frame, self.index)

    @property
    def center(self):
        return self.box.center

    def to_list(self) -> List[float]:
        return [*self.box.to_array().tolist(), float(self.score)]


@dataclass
class DetectionFrame:
    """The detections of one frame together with its dataset id"""

    frame_id: str
    detections: List[Detection] = field(default_factory=list)
    sequence: str = ""

    def __len__(self) -> int:
        return len(self.detections)


def make_frames(boxes_per_frame: Sequence[Sequence], scores_per_frame=None) -> List[List[Detection]]:
    """Build per-frame detection lists from boxes and optional scores"""
    frames = []
    for t, boxes in enumerate(boxes_per_frame):
        scores = scores_per_frame[t] if scores_per_frame is not None else [1.0] * len(boxes)
        frames.append([Detection(t, b, float(s), k) for k, (b, s) in enumerate(zip(boxes, scores))])
    return frames


def _parse_line(record: dict, position: int) -> DetectionFrame:
    detections = []
    for k, values in enumerate(record.get("boxes", [])):
        values = np.asarray(values, dtype=np.float64)
        score = float(values[7]) if values.size > 7 else 1.0
        detections.append(Detection(position, BBox3D.from_array(values[:7]), score, k))
    return DetectionFrame(str(record["frame"]), detections, str(record.get("sequence", "")))


def read_detections(path) -> List[DetectionFrame]:
    """Read detections in JSON-lines form, one frame per line

    Each line is ``{"frame": id, "sequence": name, "boxes": [[cx, cy, cz, l,
    w, h, yaw, score], ...]}``; the sequence key is optional and a missing
    score reads as 1. Frame positions count lines per sequence.
    """
    frames, positions = [], {}
    with open(path, "r") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            seq = str(record.get("sequence", ""))
            position = positions.get(seq, 0)
            positions[seq] = position + 1
            frames.append(_parse_line(record, position))
    return frames


def write_detections(path, frames: Sequence[DetectionFrame]) -> None:
    with open(path, "w") as f:
        for frame in frames:
            record = {"frame": frame.frame_id}
            if frame.sequence:
                record["sequence"] = frame.sequence
            record["boxes"] = [d.to_list() for d in frame.detections]
            f.write(json.dumps(record) + "\n")


def group_sequences(frames: Sequence[DetectionFrame]) -> Dict[str, List[DetectionFrame]]:
    """Split frames by sequence name, keeping file order"""
    groups: Dict[str, List[DetectionFrame]] = {}
    for frame in frames:
        groups.setdefault(frame.sequence, []).append(frame)
    return groups
