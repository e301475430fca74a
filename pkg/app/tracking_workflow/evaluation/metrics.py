"""Overlap / center-error curves and per-sequence statistics."""

from dataclasses import dataclass

import numpy as np

from app.core.exception import EvaluationError
from app.domain.models import BBox
from app.tracking_workflow.constants import (
    PRECISION_HEADLINE,
    PRECISION_MAX_DISTANCE,
    PRECISION_REFERENCE_SIZE,
    REACQUIRE_IOU,
    REACQUIRE_WINDOW,
    SUCCESS_THRESHOLDS,
)
from app.tracking_workflow.geometry import center_distance, overlap_ratio


@dataclass
class Curve:
    thresholds: np.ndarray
    values: np.ndarray
    summary: float  # 成功率曲線ならAUC、精度曲線なら代表閾値での値

    def rows(self) -> list[dict[str, object]]:
        return [
            {"threshold": round(float(th), 6), "value": round(float(v), 6)}
            for th, v in zip(self.thresholds, self.values, strict=True)
        ]


def _xywh_to_center(boxes: np.ndarray) -> np.ndarray:
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    return np.column_stack([boxes[:, 0] + boxes[:, 2] / 2.0, boxes[:, 1] + boxes[:, 3] / 2.0, boxes[:, 2:]])


def _check(pred: np.ndarray, truth: np.ndarray, valid: np.ndarray | None) -> np.ndarray:
    if len(pred) != len(truth):
        raise EvaluationError("metrics", "length", f"{len(pred)} predictions for {len(truth)} ground-truth frames")
    if valid is None:
        return np.ones(len(truth), dtype=bool)
    valid = np.asarray(valid, dtype=bool)
    if len(valid) != len(truth):
        raise EvaluationError("metrics", "length", f"{len(valid)} flags for {len(truth)} frames")
    return valid


def iou(b1: BBox, b2: BBox) -> float:
    """左上形式の2ボックスのIoU."""
    a = np.array(b1.to_center())
    b = np.array(b2.to_center())
    return float(overlap_ratio(a, b)[0])


def frame_overlaps(pred: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """(T, 4) 左上形式同士のフレームごとのIoU."""
    return overlap_ratio(_xywh_to_center(pred), _xywh_to_center(truth))


def success_curve(pred: np.ndarray, truth: np.ndarray, valid: np.ndarray | None = None) -> Curve:
    """IoU閾値 0〜1 の101点の成功率曲線とAUC. valid=False のフレームは除外する."""
    mask = _check(pred, truth, valid)
    thresholds = np.linspace(0.0, 1.0, SUCCESS_THRESHOLDS)
    if not mask.any():
        values = np.zeros_like(thresholds)
    else:
        overlaps = frame_overlaps(np.asarray(pred)[mask], np.asarray(truth)[mask])
        values = (overlaps[None, :] >= thresholds[:, None]).mean(axis=1)
    return Curve(thresholds=thresholds, values=values, summary=float(values.mean()))


def precision_scale(frame_size: tuple[int, int]) -> float:
    """中心誤差の閾値をフレームの大きさに合わせる倍率."""
    ref_h, ref_w = PRECISION_REFERENCE_SIZE
    return min(frame_size[0] / ref_h, frame_size[1] / ref_w)


def precision_curve(
    pred: np.ndarray, truth: np.ndarray, valid: np.ndarray | None = None, scale: float = 1.0
) -> Curve:
    """中心誤差の閾値 0〜50（×scale）ピクセルの精度曲線と、20（×scale）での値."""
    mask = _check(pred, truth, valid)
    thresholds = np.arange(PRECISION_MAX_DISTANCE + 1, dtype=np.float64) * scale
    if not mask.any():
        return Curve(thresholds=thresholds, values=np.zeros_like(thresholds), summary=0.0)
    distances = center_distance(_xywh_to_center(np.asarray(pred)[mask]), _xywh_to_center(np.asarray(truth)[mask]))
    values = (distances[None, :] <= thresholds[:, None]).mean(axis=1)
    return Curve(thresholds=thresholds, values=values, summary=float(values[PRECISION_HEADLINE]))


def reappearance_frames(visible: np.ndarray) -> list[int]:
    """不可視区間のあとで最初に見えるフレーム."""
    visible = np.asarray(visible, dtype=bool)
    return [t for t in range(1, len(visible)) if visible[t] and not visible[t - 1]]


def reacquired(
    pred: np.ndarray,
    truth: np.ndarray,
    visible: np.ndarray,
    window: int = REACQUIRE_WINDOW,
    threshold: float = REACQUIRE_IOU,
) -> bool | None:
    """全ての再出現について window フレーム以内に IoU >= threshold になったか. 再出現がなければ None."""
    _check(pred, truth, visible)
    events = reappearance_frames(visible)
    if not events:
        return None
    overlaps = frame_overlaps(pred, truth)
    for start in events:
        stop = min(start + window, len(truth))
        span = [t for t in range(start, stop) if visible[t]]
        if not span or overlaps[span].max() < threshold:
            return False
    return True


def mean_curve(curves: list[Curve]) -> Curve:
    """シーケンスごとの曲線の平均（閾値は共通であること）."""
    if not curves:
        raise EvaluationError("metrics", "mean_curve", "no curves to average")
    values = np.mean([c.values for c in curves], axis=0)
    summary = float(np.mean([c.summary for c in curves]))
    return Curve(thresholds=curves[0].thresholds, values=values, summary=summary)
