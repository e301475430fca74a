"""Corpus layout on disk.

    <root>/<split>/<sequence>/
        000000.png ...          RGB frames
        masks/000000.png ...    target = 255, background = 0
        groundtruth.csv         frame,x,y,w,h,visible
        language.txt            target description
        spec.json               SceneSpec
"""

from functools import partial
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from app.core.exception import CorpusError
from app.core.logging import LogLevel, log
from app.infrastructure.blob_manager import BaseBlobManager
from app.tracking_workflow.synthcorpus.render import SequenceData, generate_sequence
from app.tracking_workflow.synthcorpus.scene import EventKind, SceneSpec

GROUNDTRUTH_FIELDS = ["frame", "x", "y", "w", "h", "visible"]
TRAIN_SPLIT = "train"
TEST_SPLIT = "test"


def parse_scene(data: dict | str) -> SceneSpec:
    """dict または JSON文字列から SceneSpec を検証付きで作る."""
    try:
        if isinstance(data, str):
            return SceneSpec.model_validate_json(data)
        return SceneSpec.model_validate(data)
    except ValidationError as e:
        raise CorpusError("SceneSpec", "validate", str(e)) from e


class CorpusStore:
    """シーケンスの書き出しと読み込み."""

    def __init__(self, blob_manager: BaseBlobManager, root: str | Path) -> None:
        self.blob_manager = blob_manager
        self.root = Path(root)
        self.log = partial(log, log_level=LogLevel.INFO, subject=self.__class__.__name__)

    def sequence_dir(self, split: str, name: str) -> Path:
        return self.root / split / name

    def write_sequence(self, split: str, sequence: SequenceData) -> Path:
        directory = self.sequence_dir(split, sequence.name)
        self.blob_manager.mkdir(directory / "masks")
        for t in range(len(sequence)):
            self.blob_manager.save_blob_as_image(sequence.frames[t], directory / f"{t:06d}.png")
            self.blob_manager.save_blob_as_image(
                sequence.masks[t] * np.uint8(255), directory / "masks" / f"{t:06d}.png"
            )
        rows: list[dict[str, object]] = []
        for t in range(len(sequence)):
            x, y, w, h = (round(float(v), 4) for v in sequence.boxes[t])
            rows.append({
                "frame": t, "x": x, "y": y, "w": w, "h": h,
                "visible": int(sequence.visible[t]),
            })
        self.blob_manager.save_blob_as_csv(rows, directory / "groundtruth.csv", GROUNDTRUTH_FIELDS)
        self.blob_manager.save_blob_as_str(sequence.sentence + "\n", directory / "language.txt")
        self.blob_manager.save_blob_as_str(
            sequence.spec.model_dump_json(indent=2), directory / "spec.json"
        )
        return directory

    def load_sequence(self, split: str, name: str) -> SequenceData:
        directory = self.sequence_dir(split, name)
        if not self.blob_manager.exists(directory / "spec.json"):
            raise CorpusError(self.__class__.__name__, "load_sequence", f"unknown sequence {directory}")
        spec = parse_scene(self.blob_manager.read_blob_as_str(directory / "spec.json"))
        rows = self.blob_manager.read_blob_as_csv(directory / "groundtruth.csv")
        n = len(rows)
        frames = np.stack([
            self.blob_manager.read_blob_as_image(directory / f"{t:06d}.png") for t in range(n)
        ])
        masks_dir = directory / "masks"
        if not self.blob_manager.exists(masks_dir / f"{0:06d}.png"):
            raise CorpusError(self.__class__.__name__, "load_sequence", f"missing masks in {directory}")
        masks = np.stack([
            self.blob_manager.read_blob_as_image(masks_dir / f"{t:06d}.png", grayscale=True) // 255
            for t in range(n)
        ]).astype(np.uint8)
        boxes = np.array([[float(r[k]) for k in ("x", "y", "w", "h")] for r in rows])
        visible = np.array([r["visible"] == "1" for r in rows], dtype=bool)
        return SequenceData(
            name=name,
            frames=frames,
            boxes=boxes,
            visible=visible,
            occluded=np.array([spec.flag(EventKind.OCCLUDE, t) for t in range(n)], dtype=bool),
            out_of_view=np.array([spec.flag(EventKind.EXIT_VIEW, t) for t in range(n)], dtype=bool),
            deformed=np.array([spec.flag(EventKind.DEFORM, t) for t in range(n)], dtype=bool),
            masks=masks,
            sentence=self.blob_manager.read_blob_as_str(directory / "language.txt").strip(),
            spec=spec,
        )

    def sequence_names(self, split: str) -> list[str]:
        split_dir = self.root / split
        if not self.blob_manager.exists(split_dir):
            raise CorpusError(self.__class__.__name__, "sequence_names", f"no split at {split_dir}")
        return [path.name for path in self.blob_manager.list_blobs(split_dir) if path.is_dir()]

    def load_split(self, split: str, limit: int | None = None) -> list[SequenceData]:
        names = self.sequence_names(split)[:limit]
        self.log(object="load_split", message=f"{split}: {len(names)} sequences")
        return [self.load_sequence(split, name) for name in names]

    def write_split(self, split: str, scenes: list[SceneSpec]) -> list[Path]:
        directories = []
        for i, scene in enumerate(scenes, 1):
            directories.append(self.write_sequence(split, generate_sequence(scene)))
            if i % 50 == 0 or i == len(scenes):
                self.log(object="write_split", message=f"{split}: {i}/{len(scenes)}")
        return directories
