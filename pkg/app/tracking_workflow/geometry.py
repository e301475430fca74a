"""Vectorized box geometry on center-format arrays (cx, cy, w, h)."""

import numpy as np

from app.domain.models import BBox
from app.tracking_workflow.constants import MIN_BOX_SIZE


def to_corners(boxes: np.ndarray) -> np.ndarray:
    """(…, 4) 中心形式 → (…, 4) の (x0, y0, x1, y1)."""
    boxes = np.asarray(boxes, dtype=np.float64)
    half = boxes[..., 2:] / 2.0
    return np.concatenate([boxes[..., :2] - half, boxes[..., :2] + half], axis=-1)


def from_bbox(bbox: BBox) -> np.ndarray:
    return np.array(bbox.to_center(), dtype=np.float64)


def to_bbox(box: np.ndarray) -> BBox:
    cx, cy, w, h = (float(v) for v in box)
    return BBox.from_center(cx, cy, w, h)


def overlap_ratio(boxes: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """各ボックスと参照ボックスのIoU. reference は (4,) または boxes と同数の (n, 4)."""
    a = to_corners(np.atleast_2d(boxes))
    b = to_corners(np.atleast_2d(reference))
    iw = np.clip(np.minimum(a[:, 2], b[:, 2]) - np.maximum(a[:, 0], b[:, 0]), 0.0, None)
    ih = np.clip(np.minimum(a[:, 3], b[:, 3]) - np.maximum(a[:, 1], b[:, 1]), 0.0, None)
    inter = iw * ih
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a + area_b - inter
    return np.where(union > 0, inter / np.where(union > 0, union, 1.0), 0.0)


def center_distance(boxes: np.ndarray, reference: np.ndarray) -> np.ndarray:
    a = np.atleast_2d(boxes)
    b = np.atleast_2d(reference)
    return np.hypot(a[:, 0] - b[:, 0], a[:, 1] - b[:, 1])


def clip_to_frame(boxes: np.ndarray, frame_size: tuple[int, int]) -> np.ndarray:
    """ボックスをフレーム (H, W) 内に収める. 辺長は [MIN_BOX_SIZE, フレーム幅] に制限."""
    height, width = frame_size
    out = np.array(boxes, dtype=np.float64, copy=True).reshape(-1, 4)
    out[:, 2] = np.clip(out[:, 2], MIN_BOX_SIZE, max(width, MIN_BOX_SIZE))
    out[:, 3] = np.clip(out[:, 3], MIN_BOX_SIZE, max(height, MIN_BOX_SIZE))
    out[:, 0] = np.clip(out[:, 0], out[:, 2] / 2.0, width - out[:, 2] / 2.0)
    out[:, 1] = np.clip(out[:, 1], out[:, 3] / 2.0, height - out[:, 3] / 2.0)
    return out
