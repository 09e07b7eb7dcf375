from __future__ import annotations
from dataclasses import dataclass, field, asdict
from typing import List
import json

from colorama import Fore, Style

from hunterforge.eval_metrics.metrics import EvalConfig, ThresholdStats


@dataclass
class MetricsReport:
    """Per-threshold statistics and their means"""

    per_threshold: List[ThresholdStats] = field(default_factory=list)
    mAP: float = 0.0
    mPrec: float = 0.0
    mRecall: float = 0.0
    thresholded_mPrec: float = 0.0
    thresholded_mRecall: float = 0.0
    n_gt: int = 0
    n_det: int = 0
    n_frames: int = 0
    config: dict = field(default_factory=dict)

    @classmethod
    def from_stats(cls, stats: List[ThresholdStats], n_gt: int, n_det: int, n_frames: int, cfg: EvalConfig) -> MetricsReport:
        n = len(stats)
        mean = lambda attr: sum(getattr(s, attr) for s in stats) / n
        return cls(
            stats,
            mean("ap"),
            mean("precision"),
            mean("recall"),
            mean("thresholded_precision"),
            mean("thresholded_recall"),
            n_gt,
            n_det,
            n_frames,
            asdict(cfg),
        )

    def ap(self, distance: float) -> float:
        for s in self.per_threshold:
            if s.distance == distance:
                return s.ap
        raise KeyError(distance)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, path=None, indent=2) -> str:
        text = json.dumps(self.to_dict(), indent=indent)
        if path is not None:
            with open(path, "w") as f:
                f.write(text + "\n")
        return text

    def format_table(self, color: bool = True) -> str:
        """Fixed-width table: AP per threshold, mAP, mPrec and mRecall"""
        heads = [f"AP({s.distance:g})" for s in self.per_threshold] + ["mAP", "mPrec", "mRecall"]
        values = [s.ap for s in self.per_threshold] + [self.mAP, self.mPrec, self.mRecall]
        cut = self.config.get("score_threshold", 0.5)
        width = 10
        head = "".join(h.rjust(width) for h in heads)
        row = "".join(f"{100.0 * v:.2f}".rjust(width) for v in values)
        thr = (
            f"score >= {cut:g}: mPrec {100.0 * self.thresholded_mPrec:.2f}"
            f"  mRecall {100.0 * self.thresholded_mRecall:.2f}"
        )
        if color:
            head = Fore.CYAN + head + Style.RESET_ALL
            thr = Style.DIM + thr + Style.RESET_ALL
        return "\n".join([head, row, thr])

    def __str__(self):
        return self.format_table(color=False)
