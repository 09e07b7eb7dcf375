from __future__ import annotations
from pathlib import Path
from typing import List, Optional
import hashlib
import json
import logging

from hunterforge.geometry_core import read_xyz, write_bin
from hunterforge.scene_forge import Manifest
from hunterforge.track_filter import DetectionFrame, read_detections

logger = logging.getLogger(__name__)


def dumps(obj) -> str:
    """Canonical JSON text: sorted keys, fixed indent"""
    return json.dumps(obj, indent=2, sort_keys=True)


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj) + "\n")
    return path


def content_hash(obj, length: int = 12) -> str:
    """Short sha256 digest of the canonical JSON form of ``obj``"""
    return hashlib.sha256(dumps(obj).encode("utf-8")).hexdigest()[:length]


def convert_xyz(src, dst) -> int:
    """Convert an ASCII xyz cloud to the packed float format

    :return: number of points written
    :rtype: int
    """
    cloud = read_xyz(src)
    Path(dst).parent.mkdir(parents=True, exist_ok=True)
    write_bin(dst, cloud)
    return len(cloud)


def read_ground_truth(manifest: Manifest, skipped: Optional[List[str]] = None) -> List[DetectionFrame]:
    """Ground-truth boxes of every labeled manifest frame

    A label file holds one JSON line in the detections format. Frames whose
    label file is missing or unreadable are skipped with a warning and their
    ids are appended to ``skipped`` when given.
    """
    frames = []
    for seq in manifest.sequences:
        for record in seq.frames:
            if record.labels is None:
                continue
            try:
                parsed = read_detections(record.labels)
            except (OSError, ValueError, KeyError) as e:
                logger.warning("skipping labels of frame %s: %s", record.id, e)
                if skipped is not None:
                    skipped.append(record.id)
                continue
            boxes = [d for f in parsed for d in f.detections]
            frames.append(DetectionFrame(record.id, boxes, seq.name))
    return frames
