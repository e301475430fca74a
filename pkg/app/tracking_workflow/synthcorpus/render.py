"""Rasterize a SceneSpec into frames, boxes, masks and a sentence."""

from dataclasses import dataclass

import cv2
import numpy as np

from app.core.exception import CorpusError
from app.domain.models import BBox
from app.tracking_workflow.constants import BACKGROUND_LEVEL, BACKGROUND_NOISE, PALETTE
from app.tracking_workflow.gpgnet.masks import box_pixel_span, mask_from_bbox
from app.tracking_workflow.synthcorpus.scene import (
    EventKind,
    ObjectSpec,
    SceneSpec,
    describe_target,
)

# 遮蔽物の色（背景より暗いグレー）
OCCLUDER_COLOR = (70, 70, 70)


@dataclass
class SequenceData:
    """1シーケンス分の画像と正解.

    boxes は左上形式 (x, y, w, h)。ターゲットが画面外のフレームは visible=False で
    boxes の行は0。
    """

    name: str
    frames: np.ndarray  # (T, H, W, 3) uint8
    boxes: np.ndarray  # (T, 4)
    visible: np.ndarray  # (T,) bool
    occluded: np.ndarray  # (T,) bool
    out_of_view: np.ndarray  # (T,) bool
    deformed: np.ndarray  # (T,) bool
    masks: np.ndarray  # (T, H, W) uint8, 0/1
    sentence: str
    spec: SceneSpec

    def __len__(self) -> int:
        return int(self.frames.shape[0])

    @property
    def frame_size(self) -> tuple[int, int]:
        return int(self.frames.shape[1]), int(self.frames.shape[2])

    @property
    def has_distractor(self) -> bool:
        return bool(self.spec.distractors)

    def bbox(self, t: int) -> BBox | None:
        if not self.visible[t]:
            return None
        x, y, w, h = (float(v) for v in self.boxes[t])
        return BBox(x=x, y=y, w=w, h=h)

    def visible_frames(self) -> np.ndarray:
        return np.flatnonzero(self.visible)

    def distractor_boxes(self, t: int) -> list[BBox]:
        return [_object_box(d, t, len(self)) for d in self.spec.distractors]


def _background(spec: SceneSpec) -> np.ndarray:
    rng = np.random.default_rng(spec.seed)
    noise = rng.normal(0.0, BACKGROUND_NOISE, size=(spec.height, spec.width, 1))
    tint = rng.integers(-10, 11, size=3)
    image = BACKGROUND_LEVEL + noise + tint[None, None, :]
    return np.clip(np.round(image), 0, 255).astype(np.uint8)


def _draw(image: np.ndarray, shape: str, color: str, box: BBox) -> None:
    r0, r1, c0, c1 = box_pixel_span(box, image.shape[:2])
    if r1 <= r0 or c1 <= c0:
        return
    rgb = tuple(int(v) for v in PALETTE[color])
    if shape == "square":
        image[r0:r1, c0:c1] = rgb
    elif shape == "circle":
        center = ((c0 + c1 - 1) // 2, (r0 + r1 - 1) // 2)
        axes = (max((c1 - c0) // 2, 1), max((r1 - r0) // 2, 1))
        cv2.ellipse(image, center, axes, 0, 0, 360, rgb, thickness=-1)
    else:
        points = np.array([[(c0 + c1 - 1) // 2, r0], [c0, r1 - 1], [c1 - 1, r1 - 1]], dtype=np.int32)
        cv2.fillPoly(image, [points], rgb)


def _object_box(obj: ObjectSpec, t: int, n_frames: int) -> BBox:
    cx, cy = obj.center_at(t, n_frames)
    return BBox.from_center(cx, cy, obj.size, obj.size)


def generate_sequence(spec: SceneSpec) -> SequenceData:
    """シーンを描画する. 同じ spec からは常にバイト単位で同じフレームを生成する."""
    if not spec.box_inside(0):
        raise CorpusError("generate_sequence", spec.name, "target starts outside the frame")
    n = spec.n_frames
    frame_size = (spec.height, spec.width)
    background = _background(spec)
    frames = np.zeros((n, spec.height, spec.width, 3), dtype=np.uint8)
    masks = np.zeros((n, spec.height, spec.width), dtype=np.uint8)
    boxes = np.zeros((n, 4), dtype=np.float64)
    visible = np.ones(n, dtype=bool)
    occluded = np.zeros(n, dtype=bool)
    out_of_view = np.zeros(n, dtype=bool)
    deformed = np.zeros(n, dtype=bool)

    for t in range(n):
        image = background.copy()
        for distractor in spec.distractors:
            _draw(image, distractor.shape, distractor.color, _object_box(distractor, t, n))

        out_of_view[t] = spec.flag(EventKind.EXIT_VIEW, t)
        occluded[t] = spec.flag(EventKind.OCCLUDE, t)
        deformed[t] = spec.flag(EventKind.DEFORM, t)
        cx, cy = spec.target_center(t)
        w, h = spec.target_extent(t)
        box = BBox.from_center(cx, cy, w, h)

        if out_of_view[t]:
            visible[t] = False
        else:
            _draw(image, spec.target.shape, spec.target.color, box)
            boxes[t] = box.to_xywh()
            masks[t] = mask_from_bbox(frame_size, box)
            if occluded[t]:
                r0, r1, c0, c1 = box_pixel_span(
                    BBox(x=box.x - 1, y=box.y - 1, w=box.w + 2, h=box.h + 2), frame_size
                )
                image[r0:r1, c0:c1] = OCCLUDER_COLOR
        frames[t] = image

    return SequenceData(
        name=spec.name,
        frames=frames,
        boxes=boxes,
        visible=visible,
        occluded=occluded,
        out_of_view=out_of_view,
        deformed=deformed,
        masks=masks,
        sentence=describe_target(spec),
        spec=spec,
    )
