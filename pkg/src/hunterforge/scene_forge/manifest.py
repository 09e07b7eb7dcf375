from __future__ import annotations
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Optional
import json

from hunterforge.tools.errors import ManifestError


@dataclass
class FrameRecord:
    id: str
    cloud: Path
    labels: Optional[Path] = None


@dataclass
class SequenceRecord:
    name: str
    frames: List[FrameRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.frames)


@dataclass
class Manifest:
    """A dataset as ordered sequences of frame files

    Paths in the JSON file are relative to the manifest's directory and are
    made absolute on load.
    """

    name: str
    sequences: List[SequenceRecord] = field(default_factory=list)
    root: Path = field(default_factory=Path)

    def __post_init__(self):
        seen = set()
        for frame in self.frames():
            if frame.id in seen:
                raise ManifestError(f"duplicate frame id '{frame.id}'")
            seen.add(frame.id)

    def frames(self) -> Iterator[FrameRecord]:
        for seq in self.sequences:
            yield from seq.frames

    def n_frames(self) -> int:
        return sum(len(s) for s in self.sequences)

    def is_empty(self) -> bool:
        return self.n_frames() == 0

    def frame(self, frame_id: str) -> FrameRecord:
        for f in self.frames():
            if f.id == frame_id:
                return f
        raise KeyError(frame_id)

    @classmethod
    def from_dict(cls, d: dict, root=".") -> Manifest:
        root = Path(root)
        try:
            sequences = [
                SequenceRecord(
                    str(s["name"]),
                    [
                        FrameRecord(
                            str(f["id"]),
                            root / f["cloud"],
                            root / f["labels"] if f.get("labels") else None,
                        )
                        for f in s["frames"]
                    ],
                )
                for s in d["sequences"]
            ]
        except (KeyError, TypeError) as e:
            raise ManifestError(f"malformed manifest: {e}") from e
        return cls(str(d.get("name", "dataset")), sequences, root)

    def to_dict(self) -> dict:
        def rel(p: Optional[Path]):
            if p is None:
                return None
            try:
                return Path(p).relative_to(self.root).as_posix()
            except ValueError:
                return Path(p).as_posix()

        return {
            "name": self.name,
            "sequences": [
                {
                    "name": s.name,
                    "frames": [
                        {"id": f.id, "cloud": rel(f.cloud), **({"labels": rel(f.labels)} if f.labels else {})}
                        for f in s.frames
                    ],
                }
                for s in self.sequences
            ],
        }

    @classmethod
    def load(cls, path) -> Manifest:
        path = Path(path)
        try:
            with open(path, "r") as f:
                d = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ManifestError(f"cannot read manifest {path}: {e}") from e
        return cls.from_dict(d, path.parent.resolve())

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)
