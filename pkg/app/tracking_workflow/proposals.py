"""Candidate generation: local Gaussian sampling and attention-driven global proposals.

All boxes are float64 arrays in center format (cx, cy, w, h), pixel units.
Pixel (row r, col c) covers [c, c+1) x [r, r+1), so its center is (c + 0.5, r + 0.5).
"""

from dataclasses import dataclass, field

import cv2
import numpy as np

from app.core.exception import ProposalError
from app.domain.enums import Provenance
from app.tracking_workflow.constants import MIN_BOX_SIZE, NEGATIVE_IOU, POSITIVE_IOU, SCALE_BASE
from app.tracking_workflow.geometry import clip_to_frame, overlap_ratio


@dataclass
class Region:
    """二値化したアテンションの8連結成分."""

    rows: np.ndarray
    cols: np.ndarray
    center: tuple[float, float]  # (x, y)

    @property
    def area(self) -> int:
        return int(self.rows.size)

    @property
    def pixels(self) -> set[tuple[int, int]]:
        return set(zip(self.rows.tolist(), self.cols.tolist(), strict=True))


@dataclass
class CandidatePool:
    boxes: np.ndarray  # (n, 4)
    provenance: list[Provenance] = field(default_factory=list)

    def __len__(self) -> int:
        return int(self.boxes.shape[0])

    def count(self, provenance: Provenance) -> int:
        return sum(1 for p in self.provenance if p == provenance)

    def debug_records(self, frame: int, scores: np.ndarray | None = None) -> list[dict]:
        records = []
        for i, (box, tag) in enumerate(zip(self.boxes, self.provenance, strict=True)):
            records.append({
                "frame": frame,
                "provenance": tag.value,
                "bbox": [round(float(v), 3) for v in box],
                "score": None if scores is None else float(scores[i]),
            })
        return records


def threshold_regions(attention: np.ndarray, tau: float = 0.5, min_area: int = 4) -> list[Region]:
    """アテンションを τ で二値化し、8連結成分を抽出する（面積 min_area 未満は除外）."""
    if not 0.0 < tau < 1.0:
        raise ProposalError("threshold_regions", "tau", f"tau must be in (0, 1) (got {tau})")
    binary = (np.asarray(attention) >= tau).astype(np.uint8)
    count, labels, stats, _ = cv2.connectedComponentsWithStats(binary, connectivity=8)
    regions = []
    for label in range(1, count):
        if stats[label, cv2.CC_STAT_AREA] < min_area:
            continue
        rows, cols = np.nonzero(labels == label)
        regions.append(
            Region(
                rows=rows, cols=cols,
                center=(float(cols.mean()) + 0.5, float(rows.mean()) + 0.5),
            )
        )
    return regions


def region_boxes(regions: list[Region], reference_size: tuple[float, float]) -> np.ndarray:
    """各領域を覆うボックス. 軸ごとに、外接幅が参照サイズ未満なら参照サイズを領域中心に置く.

    Args:
    ----
        regions: threshold_regions の結果
        reference_size: 直前のターゲットサイズ (w0, h0)

    Returns:
    -------
        (len(regions), 4) の中心形式ボックス
    """
    w0, h0 = reference_size
    boxes = np.zeros((len(regions), 4), dtype=np.float64)
    for i, region in enumerate(regions):
        x0, x1 = float(region.cols.min()), float(region.cols.max()) + 1.0
        y0, y1 = float(region.rows.min()), float(region.rows.max()) + 1.0
        cx, cy = region.center
        if x1 - x0 >= w0:
            boxes[i, 0], boxes[i, 2] = (x0 + x1) / 2.0, x1 - x0
        else:
            boxes[i, 0], boxes[i, 2] = cx, w0
        if y1 - y0 >= h0:
            boxes[i, 1], boxes[i, 3] = (y0 + y1) / 2.0, y1 - y0
        else:
            boxes[i, 1], boxes[i, 3] = cy, h0
    return boxes


def _check_box(box: np.ndarray, name: str) -> np.ndarray:
    box = np.asarray(box, dtype=np.float64).reshape(4)
    if not (box[2] > 0 and box[3] > 0) or not np.all(np.isfinite(box)):
        raise ProposalError(name, "box", f"degenerate box {box.tolist()}")
    return box


def gaussian_sample(
    box: np.ndarray,
    n: int,
    rng: np.random.Generator,
    sigma_xy: float = 0.3,
    sigma_scale: float = 0.5,
    frame_size: tuple[int, int] | None = None,
) -> np.ndarray:
    """中心を N(0, σ_xy·mean(w,h))、スケールを 1.05^N(0, σ_s) で摂動."""
    box = _check_box(box, "gaussian_sample")
    if n < 1:
        raise ProposalError("gaussian_sample", "n", f"n must be >= 1 (got {n})")
    noise = rng.standard_normal((n, 3))
    samples = np.tile(box, (n, 1))
    spread = sigma_xy * (box[2] + box[3]) / 2.0
    samples[:, 0] += spread * noise[:, 0]
    samples[:, 1] += spread * noise[:, 1]
    samples[:, 2:] *= (SCALE_BASE ** (sigma_scale * noise[:, 2]))[:, None]
    return samples if frame_size is None else clip_to_frame(samples, frame_size)


def uniform_sample(
    box: np.ndarray,
    n: int,
    rng: np.random.Generator,
    frame_size: tuple[int, int],
    translation: float = 1.0,
    scale_range: float = 1.6,
) -> np.ndarray:
    """中心を ±translation·mean(w,h) の一様分布で摂動（学習用負例）."""
    box = _check_box(box, "uniform_sample")
    samples = np.tile(box, (n, 1))
    spread = translation * (box[2] + box[3]) / 2.0
    samples[:, :2] += rng.uniform(-spread, spread, size=(n, 2))
    samples[:, 2:] *= (SCALE_BASE ** (scale_range * rng.uniform(-1.0, 1.0, size=n)))[:, None]
    return clip_to_frame(samples, frame_size)


def whole_sample(
    box: np.ndarray,
    n: int,
    rng: np.random.Generator,
    frame_size: tuple[int, int],
    scale_range: float = 1.6,
) -> np.ndarray:
    """フレーム全体から中心を一様に選ぶ（学習用負例）."""
    box = _check_box(box, "whole_sample")
    height, width = frame_size
    samples = np.tile(box, (n, 1))
    samples[:, 0] = rng.uniform(0.0, width, size=n)
    samples[:, 1] = rng.uniform(0.0, height, size=n)
    samples[:, 2:] *= (SCALE_BASE ** (scale_range * rng.uniform(-1.0, 1.0, size=n)))[:, None]
    return clip_to_frame(samples, frame_size)


def draw_labeled_samples(
    box: np.ndarray,
    n_pos: int,
    n_neg: int,
    rng: np.random.Generator,
    frame_size: tuple[int, int],
    max_rounds: int = 10,
) -> tuple[np.ndarray, np.ndarray]:
    """IoU規則でラベル付けした正例・負例ボックス.

    正例は狭いガウス摂動から IoU >= 0.7 のもの、負例は一様サンプルと
    フレーム全体サンプルから IoU <= 0.5 のものを集める。

    Returns:
    -------
        (n_pos, 4) の正例と (n_neg, 4) の負例
    """
    box = _check_box(box, "draw_labeled_samples")
    positives: list[np.ndarray] = []
    negatives: list[np.ndarray] = []
    n_found_pos = n_found_neg = 0
    for _ in range(max_rounds):
        if n_found_pos < n_pos:
            cand = gaussian_sample(box, 2 * n_pos, rng, 0.1, 1.0, frame_size)
            cand = cand[overlap_ratio(cand, box) >= POSITIVE_IOU]
            positives.append(cand)
            n_found_pos += len(cand)
        if n_found_neg < n_neg:
            half = max(n_neg // 2, 1)
            cand = np.concatenate([
                uniform_sample(box, half, rng, frame_size, translation=1.0),
                whole_sample(box, half, rng, frame_size),
            ])
            cand = cand[overlap_ratio(cand, box) <= NEGATIVE_IOU]
            negatives.append(cand)
            n_found_neg += len(cand)
        if n_found_pos >= n_pos and n_found_neg >= n_neg:
            break
    pos = np.concatenate(positives) if positives else np.zeros((0, 4))
    neg = np.concatenate(negatives) if negatives else np.zeros((0, 4))
    if len(pos) < n_pos:
        pos = np.concatenate([pos, np.tile(clip_to_frame(box, frame_size), (n_pos - len(pos), 1))])
    if len(neg) < n_neg:
        if len(neg) == 0:
            raise ProposalError("draw_labeled_samples", "negatives", "no box with IoU <= 0.5")
        neg = neg[rng.integers(0, len(neg), size=n_neg)]
    return pos[:n_pos], neg[:n_neg]


def attention_to_frame(attention: np.ndarray, frame_size: tuple[int, int]) -> np.ndarray:
    """エンコーダ解像度のアテンションをフレーム解像度 (H, W) へ写像."""
    height, width = frame_size
    if attention.shape == (height, width):
        return attention
    resized = cv2.resize(attention.astype(np.float32), (width, height), interpolation=cv2.INTER_LINEAR)
    return np.clip(resized.astype(np.float64), 0.0, 1.0)


def global_proposals(
    attention: np.ndarray,
    reference_size: tuple[float, float],
    rng: np.random.Generator,
    frame_size: tuple[int, int],
    tau: float = 0.5,
    min_area: int = 4,
    n_per_region: int = 8,
    sigma_xy: float = 0.3,
    sigma_scale: float = 0.5,
) -> np.ndarray:
    """アテンション領域 → 覆うボックス → 各ボックス周りのガウスサンプル."""
    regions = threshold_regions(attention_to_frame(attention, frame_size), tau, min_area)
    if not regions:
        return np.zeros((0, 4), dtype=np.float64)
    boxes = clip_to_frame(region_boxes(regions, reference_size), frame_size)
    return np.concatenate([
        gaussian_sample(box, n_per_region, rng, sigma_xy, sigma_scale, frame_size)
        for box in boxes
    ])


def merge_candidate_pools(
    local: np.ndarray, global_: np.ndarray, n: int = 320, max_global: int = 64
) -> CandidatePool:
    """大域候補を優先して（最大 max_global 個）残し、局所候補で N 個まで埋める."""
    local = np.asarray(local, dtype=np.float64).reshape(-1, 4)
    global_ = np.asarray(global_, dtype=np.float64).reshape(-1, 4)
    if len(local) == 0 and len(global_) == 0:
        raise ProposalError("merge_candidate_pools", "pool", "both candidate lists are empty")
    kept_global = global_[: min(max_global, n)]
    kept_local = local[: max(n - len(kept_global), 0)]
    return CandidatePool(
        boxes=np.concatenate([kept_global, kept_local]),
        provenance=[Provenance.GLOBAL] * len(kept_global) + [Provenance.LOCAL] * len(kept_local),
    )


def _warp_box(scaled: np.ndarray, box: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    cx, cy, w, h = box
    w, h = max(w, MIN_BOX_SIZE / 4.0), max(h, MIN_BOX_SIZE / 4.0)
    sx, sy = out_w / w, out_h / h
    x0, y0 = cx - w / 2.0, cy - h / 2.0
    # 出力画素中心 (u+0.5) が入力座標 x0 + (u+0.5)/sx に対応
    matrix = np.array([[sx, 0.0, -x0 * sx - 0.5 + 0.5 * sx],
                       [0.0, sy, -y0 * sy - 0.5 + 0.5 * sy]], dtype=np.float64)
    warped = cv2.warpAffine(
        scaled, matrix, (out_w, out_h),
        flags=cv2.INTER_LINEAR, borderMode=cv2.BORDER_CONSTANT, borderValue=(0.0, 0.0, 0.0),
    )
    return warped.transpose(2, 0, 1)


def scale_frame(frame: np.ndarray) -> np.ndarray:
    """uint8 RGB を [-0.5, 0.5] の float32 に."""
    return frame.astype(np.float32) / 255.0 - 0.5


def crop_patches(frame: np.ndarray, boxes: np.ndarray, patch_size: int) -> np.ndarray:
    """ボックス領域を切り出してバイリニア補間で patch_size 四方に縮小.

    Args:
    ----
        frame: (H, W, 3) uint8 のRGBフレーム
        boxes: (n, 4) 中心形式
        patch_size: 出力パッチの一辺

    Returns:
    -------
        (n, 3, P, P) の配列（画素値は [-0.5, 0.5]、フレーム外は0）
    """
    scaled = scale_frame(frame)
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    patches = np.zeros((len(boxes), 3, patch_size, patch_size), dtype=np.float64)
    for i, box in enumerate(boxes):
        patches[i] = _warp_box(scaled, box, patch_size, patch_size)
    return patches


def crop_region(frame: np.ndarray, box: np.ndarray, out_shape: tuple[int, int]) -> np.ndarray:
    """1つのボックスを (3, H, W) に引き伸ばして切り出す."""
    return _warp_box(scale_frame(frame), np.asarray(box, dtype=np.float64), *out_shape).astype(np.float64)

