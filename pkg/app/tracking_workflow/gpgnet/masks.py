"""Binary box masks and their PNG form."""

import numpy as np

from app.core.exception import ProposalError
from app.domain.models import BBox


def box_pixel_span(bbox: BBox, frame_size: tuple[int, int]) -> tuple[int, int, int, int]:
    """ボックスが覆う画素範囲 (r0, r1, c0, c1)（半開区間、フレームでクリップ）.

    端点は floor(v + 0.5) で丸める。
    """
    height, width = frame_size
    c0 = int(np.clip(np.floor(bbox.x + 0.5), 0, width))
    c1 = int(np.clip(np.floor(bbox.x + bbox.w + 0.5), 0, width))
    r0 = int(np.clip(np.floor(bbox.y + 0.5), 0, height))
    r1 = int(np.clip(np.floor(bbox.y + bbox.h + 0.5), 0, height))
    return r0, r1, c0, c1


def mask_from_bbox(frame_size: tuple[int, int], bbox: BBox) -> np.ndarray:
    """ターゲット = 1、背景 = 0 の (H, W) uint8 マスク."""
    if not bbox.is_valid():
        raise ProposalError("mask_from_bbox", "bbox", f"degenerate box {bbox.to_xywh()}")
    if not bbox.intersects(frame_size[1], frame_size[0]):
        raise ProposalError("mask_from_bbox", "bbox", f"box {bbox.to_xywh()} lies outside the {frame_size} frame")
    mask = np.zeros(frame_size, dtype=np.uint8)
    r0, r1, c0, c1 = box_pixel_span(bbox, frame_size)
    mask[r0:r1, c0:c1] = 1
    return mask


def to_png_values(values: np.ndarray) -> np.ndarray:
    """[0, 1] の値を round(255·p) の uint8 に."""
    return np.round(255.0 * np.clip(values, 0.0, 1.0)).astype(np.uint8)


def from_png_values(image: np.ndarray) -> np.ndarray:
    return image.astype(np.float64) / 255.0
