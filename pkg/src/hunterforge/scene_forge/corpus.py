from __future__ import annotations
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from itertools import islice
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, Tuple
import logging

import numpy as np

from hunterforge.tools.utils import SeedLike, as_generator, draw_seed
from hunterforge.geometry_core import PointCloud, read_cloud
from hunterforge.range_view import LidarSpec
from hunterforge.lidar_sim import HumanAsset
from hunterforge.ground_seg import RansacConfig, GroundModel, segment_ground
from hunterforge.scene_forge.insertion import InsertionConfig
from hunterforge.scene_forge.manifest import Manifest, FrameRecord
from hunterforge.scene_forge.synth_frame import SynthFrame, synthesize_frame

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CorpusDraw:
    """One planned output frame: base frame position and its seed"""

    index: int
    sequence: int
    frame: int
    seed: int


def plan_corpus(manifest: Manifest, n_frames: int, rng: SeedLike) -> List[CorpusDraw]:
    """Choose a uniform sequence, then a uniform frame in it, per output frame

    Sequences without frames are never chosen. A manifest without any frame
    gives an empty plan.
    """
    rng = as_generator(rng)
    draws = []
    sequences = manifest.sequences
    nonempty = [i for i, seq in enumerate(sequences) if len(seq) > 0]
    if not nonempty:
        logger.warning("manifest %s has no frames to draw from", manifest.name)
        return draws
    for k in range(n_frames):
        s = nonempty[int(rng.integers(len(nonempty)))]
        f = int(rng.integers(len(sequences[s])))
        draws.append(CorpusDraw(k, s, f, draw_seed(rng)))
    return draws


def load_scene(record: FrameRecord, ransac_cfg: RansacConfig, origin, ground_dir=None) -> Optional[Tuple[PointCloud, GroundModel]]:
    """Read a base frame and its ground, None when the frame is unreadable"""
    try:
        scene = read_cloud(record.cloud)
    except (OSError, ValueError) as e:
        logger.warning("skipping frame %s: %s", record.id, e)
        return None

    if ground_dir is not None:
        path = Path(ground_dir) / f"{record.id}.json"
        if path.exists():
            return scene, GroundModel.load(path)
    return scene, segment_ground(scene, ransac_cfg, ransac_cfg.seed, origin)


def _forge(args) -> SynthFrame:
    scene, ground, pool, cfg, seed, spec, frame_id, base_frame = args
    frame = synthesize_frame(scene, pool, ground, cfg, seed, spec, frame_id)
    frame.provenance.base_frame = base_frame
    return frame


def corpus_generate(
    manifest: Manifest,
    n_frames: int,
    cfg: InsertionConfig,
    asset_pool: Sequence[HumanAsset],
    spec: Optional[LidarSpec] = None,
    ransac_cfg: Optional[RansacConfig] = None,
    rng: SeedLike = None,
    workers: int = 1,
    ground_dir=None,
    scene_cache: int = 8,
) -> Iterator[SynthFrame]:
    """Generate a stream of synthetic frames from a dataset

    Base frames are chosen up front from the master seed, so the stream is
    identical for any worker count. Unreadable base frames are skipped with
    a warning. Scenes are loaded lazily and at most ``scene_cache`` of them
    are held at once, parallel work is submitted in bounded batches.

    :param manifest: the dataset
    :type manifest: Manifest
    :param n_frames: number of frames to draw
    :type n_frames: int
    :param cfg: insertion parameters
    :type cfg: InsertionConfig
    :param asset_pool: humans to insert
    :type asset_pool: Sequence[HumanAsset]
    :param spec: beam layout used for simulation and merging
    :type spec: LidarSpec, optional
    :param ransac_cfg: ground segmentation parameters
    :type ransac_cfg: RansacConfig, optional
    :param rng: master seed, ``cfg.seed`` when omitted
    :type rng: SeedLike
    :param workers: worker processes; 1 runs in process
    :type workers: int
    :param ground_dir: directory of precomputed ``<frame id>.json`` ground files
    :param scene_cache: loaded scenes kept for reuse by later draws
    :type scene_cache: int
    :return: frames in draw order
    :rtype: Iterator[SynthFrame]
    """
    if n_frames <= 0:
        return
    if not asset_pool:
        raise ValueError("the asset pool is empty")
    if scene_cache < 1:
        raise ValueError("scene_cache must be at least 1")
    spec = spec or LidarSpec.hucenlife()
    ransac_cfg = ransac_cfg or RansacConfig()
    draws = plan_corpus(manifest, n_frames, cfg.seed if rng is None else rng)

    @lru_cache(maxsize=scene_cache)
    def scene(sequence: int, frame: int):
        record = manifest.sequences[sequence].frames[frame]
        return load_scene(record, ransac_cfg, spec.origin, ground_dir)

    def jobs():
        for d in draws:
            loaded = scene(d.sequence, d.frame)
            if loaded is None:
                continue
            record = manifest.sequences[d.sequence].frames[d.frame]
            yield (*loaded, asset_pool, cfg, d.seed, spec, f"{record.id}-{d.index:06d}", record.id)

    if workers <= 1:
        for job in jobs():
            yield _forge(job)
        return

    pending = jobs()
    batches = iter(lambda: list(islice(pending, 4 * workers)), [])
    with ProcessPoolExecutor(max_workers=workers) as executor:
        for batch in batches:
            yield from executor.map(_forge, batch)
