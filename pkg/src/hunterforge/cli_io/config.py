from __future__ import annotations
from dataclasses import dataclass, field, asdict, fields
from typing import Optional, Tuple
from pathlib import Path
import copy
import json
import os

from hunterforge.range_view import LidarSpec
from hunterforge.ground_seg import RansacConfig
from hunterforge.scene_forge import InsertionConfig
from hunterforge.supervision import MaskConfig, BevGrid
from hunterforge.loss_kernels import LossConfig
from hunterforge.track_filter import FilterConfig
from hunterforge.eval_metrics import EvalConfig

WORKERS_ENV = "HUNTERFORGE_WORKERS"

PRESETS = {
    "hucenlife": {
        "detection_range": (-25.6, 25.6, -51.2, 51.2, -2.5, 7.5),
        "voxel_size": (0.025, 0.05, 0.25),
    },
    "stcrowd": {
        "detection_range": (-30.72, 30.72, -40.96, 40.96, -4.0, 1.0),
        "voxel_size": (0.03, 0.04, 0.125),
    },
    "toy": {
        "detection_range": (-30.0, 30.0, -30.0, 30.0, -3.0, 3.0),
        "voxel_size": (0.05, 0.05, 0.25),
        "lidar": LidarSpec.toy().to_dict(),
        "mask": {"ground_height": -1.8},
    },
}

_SECTIONS = {
    "lidar": LidarSpec,
    "ransac": RansacConfig,
    "insertion": InsertionConfig,
    "mask": MaskConfig,
    "loss": LossConfig,
    "filter": FilterConfig,
    "eval": EvalConfig,
}


def _build(cls, d: dict, section: str):
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(d) - known)
    if unknown:
        raise ValueError(f"unknown keys in '{section}': {', '.join(unknown)}")
    return cls(**d)


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class PipelineConfig:
    """Every setting of a pipeline run

    The pipeline detection range also drives ground segmentation and the
    evaluation crop, and the master seed is copied into the ground and
    insertion configs so one number reproduces a run.

    :param dataset: preset name, one of ``hucenlife``, ``stcrowd``, ``toy``
    :param manifest: path of the dataset manifest
    :param detection_range: (x_min, x_max, y_min, y_max, z_min, z_max)
    :param voxel_size: (x, y, z) voxel size of the detector
    :param output_stride: detector downsampling; BEV cell = voxel x-size times stride
    :param seed: master seed
    :param n_assets: procedural humans generated when no asset directory is given
    :param asset_dir: directory of OBJ assets with JSON joint sidecars
    """

    dataset: str = "hucenlife"
    manifest: Optional[str] = None
    detection_range: Tuple[float, float, float, float, float, float] = PRESETS["hucenlife"]["detection_range"]
    voxel_size: Tuple[float, float, float] = PRESETS["hucenlife"]["voxel_size"]
    output_stride: int = 8
    seed: int = 0
    n_assets: int = 16
    asset_dir: Optional[str] = None
    lidar: LidarSpec = field(default_factory=LidarSpec.hucenlife)
    ransac: RansacConfig = field(default_factory=RansacConfig)
    insertion: InsertionConfig = field(default_factory=InsertionConfig)
    mask: MaskConfig = field(default_factory=MaskConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def __post_init__(self):
        self.detection_range = tuple(float(v) for v in self.detection_range)
        self.voxel_size = tuple(float(v) for v in self.voxel_size)
        r = self.detection_range
        if len(r) != 6 or not (r[0] < r[1] and r[2] < r[3] and r[4] < r[5]):
            raise ValueError("detection range bounds must be increasing")
        if len(self.voxel_size) != 3 or min(self.voxel_size) <= 0.0:
            raise ValueError("voxel sizes must be positive")
        if self.output_stride < 1 or self.n_assets < 0:
            raise ValueError("output_stride must be positive and n_assets non-negative")

        self.ransac.detection_range = self.detection_range
        self.eval.detection_range = self.detection_range
        self.ransac.seed = self.seed
        self.insertion.seed = self.seed

    @classmethod
    def from_dict(cls, d: dict) -> PipelineConfig:
        """Build a config from a possibly partial dictionary

        Missing keys take the preset named by ``dataset``, then the defaults.

        :raises ValueError: on unknown keys or an unknown preset
        """
        dataset = d.get("dataset", "hucenlife")
        if dataset not in PRESETS:
            raise ValueError(f"unknown dataset preset '{dataset}'")
        d = _merge(PRESETS[dataset], d)
        d["dataset"] = dataset

        kwargs = {}
        for k, v in d.items():
            if k in _SECTIONS:
                kwargs[k] = _build(_SECTIONS[k], dict(v), k)
            else:
                kwargs[k] = v
        return _build(cls, kwargs, "config")

    @classmethod
    def load(cls, path) -> PipelineConfig:
        """Read a JSON config; relative manifest and asset paths are taken
        relative to the config file"""
        path = Path(path)
        with open(path, "r") as f:
            d = json.load(f)
        for key in ("manifest", "asset_dir"):
            if d.get(key) and not Path(d[key]).is_absolute():
                d[key] = str((path.parent / d[key]).resolve())
        return cls.from_dict(d)

    @classmethod
    def preset(cls, dataset: str) -> PipelineConfig:
        return cls.from_dict({"dataset": dataset})

    def to_dict(self) -> dict:
        return json.loads(json.dumps(asdict(self)))

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)

    def with_seed(self, seed: int) -> PipelineConfig:
        """A copy with another master seed"""
        return PipelineConfig.from_dict({**self.to_dict(), "seed": int(seed)})

    def bev_grid(self) -> BevGrid:
        return BevGrid.from_range(self.detection_range, self.voxel_size[0] * self.output_stride)

    def workers(self) -> int:
        """Worker processes, read from the environment only"""
        try:
            return max(1, int(os.environ.get(WORKERS_ENV, "1")))
        except ValueError:
            return 1
