"""Network inputs and attention-map inspection helpers."""

from pathlib import Path

import cv2
import numpy as np

from app.domain.models import BBox
from app.infrastructure.blob_manager import BaseBlobManager
from app.tracking_workflow.geometry import from_bbox, overlap_ratio
from app.tracking_workflow.gpgnet.masks import box_pixel_span, to_png_values
from app.tracking_workflow.proposals import crop_region, scale_frame, threshold_regions


def prepare_frame(frame: np.ndarray, frame_shape: tuple[int, int]) -> np.ndarray:
    """uint8 RGB (H, W, 3) → ネットワーク入力 (3, h, w)."""
    height, width = frame_shape
    if frame.shape[:2] != (height, width):
        frame = cv2.resize(frame, (width, height), interpolation=cv2.INTER_LINEAR)
    return scale_frame(frame).transpose(2, 0, 1).astype(np.float64)


def prepare_target(frame: np.ndarray, bbox: BBox, frame_shape: tuple[int, int]) -> np.ndarray:
    """最初のフレームのターゲット領域をフレーム入力と同じ大きさへ引き伸ばす."""
    return crop_region(frame, from_bbox(bbox), frame_shape)


def resize_mask(mask: np.ndarray, frame_shape: tuple[int, int]) -> np.ndarray:
    height, width = frame_shape
    if mask.shape == (height, width):
        return mask.astype(np.float64)
    resized = cv2.resize(mask.astype(np.uint8), (width, height), interpolation=cv2.INTER_NEAREST)
    return resized.astype(np.float64)


def attention_box(attention: np.ndarray, tau: float = 0.5, min_area: int = 4) -> BBox | None:
    """閾値処理した最大の領域の外接ボックス. 領域がなければ None."""
    regions = threshold_regions(attention, tau, min_area)
    if not regions:
        return None
    largest = max(regions, key=lambda region: region.area)
    x0, x1 = float(largest.cols.min()), float(largest.cols.max()) + 1.0
    y0, y1 = float(largest.rows.min()), float(largest.rows.max()) + 1.0
    return BBox(x=x0, y=y0, w=x1 - x0, h=y1 - y0)


def attention_box_iou(attention: np.ndarray, truth: BBox, tau: float = 0.5) -> float:
    box = attention_box(attention, tau)
    if box is None:
        return 0.0
    return float(overlap_ratio(from_bbox(box), from_bbox(truth))[0])


def mean_attention(attention: np.ndarray, bbox: BBox) -> float:
    r0, r1, c0, c1 = box_pixel_span(bbox, attention.shape)
    if r1 <= r0 or c1 <= c0:
        return 0.0
    return float(attention[r0:r1, c0:c1].mean())


def prefers_described(attention: np.ndarray, target: BBox, distractors: list[BBox]) -> bool:
    """説明された物体内の平均アテンションが全ての類似物体を上回るか."""
    inside = mean_attention(attention, target)
    return all(inside > mean_attention(attention, other) for other in distractors)


def save_attention_png(blob_manager: BaseBlobManager, attention: np.ndarray, path: str | Path) -> None:
    blob_manager.save_blob_as_image(to_png_values(attention), path)
