import json

import numpy as np
import pytest

from app.core.exception import EvaluationError
from app.domain.enums import Provenance
from app.domain.models import BBox
from app.tracking_workflow.evaluation.metrics import (
    iou,
    mean_curve,
    precision_curve,
    precision_scale,
    reacquired,
    reappearance_frames,
    success_curve,
)
from app.tracking_workflow.evaluation.report import RunEvaluator, evaluate_sequence, sequence_attributes
from app.tracking_workflow.tracker import TRACK_CSV_FIELDS, FrameRecord

TRUTH = np.array([[10, 10, 10, 10], [12, 10, 10, 10], [14, 10, 10, 10], [16, 10, 10, 10]], dtype=float)


def _records(boxes: np.ndarray) -> list[FrameRecord]:
    return [
        FrameRecord(frame=t, x=b[0], y=b[1], w=b[2], h=b[3], score=1.0, provenance=Provenance.LOCAL)
        for t, b in enumerate(boxes)
    ]


def test_iou_of_identical_and_disjoint_boxes():
    box = BBox(x=0, y=0, w=4, h=4)
    assert iou(box, box) == pytest.approx(1.0)
    assert iou(box, BBox(x=10, y=10, w=4, h=4)) == 0.0
    assert iou(box, BBox(x=2, y=0, w=4, h=4)) == pytest.approx(8 / 24)


def test_perfect_tracking_scores_one():
    success = success_curve(TRUTH, TRUTH)
    precision = precision_curve(TRUTH, TRUTH)
    assert success.thresholds.shape == (101,)
    assert success.summary == pytest.approx(1.0)
    assert precision.summary == 1.0
    assert precision.thresholds.shape == (51,)


def test_success_curve_is_non_increasing_and_auc_is_mean():
    pred = TRUTH + np.array([[0, 0, 0, 0], [3, 0, 0, 0], [6, 0, 0, 0], [30, 0, 0, 0]])
    curve = success_curve(pred, TRUTH)
    assert np.all(np.diff(curve.values) <= 0)
    assert curve.summary == pytest.approx(curve.values.mean())
    assert curve.values[0] == 1.0
    assert curve.values[-1] == 0.25


def test_invisible_frames_are_excluded():
    pred = TRUTH.copy()
    pred[3] = [50, 50, 5, 5]
    visible = np.array([True, True, True, False])
    assert success_curve(pred, TRUTH, visible).summary == pytest.approx(1.0)
    assert success_curve(pred, TRUTH, np.zeros(4, dtype=bool)).summary == 0.0


def test_precision_threshold_scales_with_frame_size():
    assert precision_scale((240, 320)) == 1.0
    assert precision_scale((48, 64)) == pytest.approx(0.2)
    pred = TRUTH + np.array([3.0, 0, 0, 0])
    assert precision_curve(pred, TRUTH).summary == 1.0
    assert precision_curve(pred, TRUTH, scale=0.1).summary == 0.0


def test_length_mismatch_is_rejected():
    with pytest.raises(EvaluationError):
        success_curve(TRUTH[:3], TRUTH)
    with pytest.raises(EvaluationError):
        precision_curve(TRUTH, TRUTH, np.ones(2, dtype=bool))
    with pytest.raises(EvaluationError):
        mean_curve([])


def test_reacquisition_window():
    visible = np.array([True, False, False, True, True, True, True])
    assert reappearance_frames(visible) == [3]
    truth = np.tile([10.0, 10.0, 10.0, 10.0], (7, 1))
    late = truth.copy()
    late[:6] = [40, 40, 10, 10]
    assert reacquired(truth, truth, visible) is True
    assert reacquired(late, truth, visible, window=3) is False
    assert reacquired(late, truth, visible, window=4) is True
    assert reacquired(truth, truth, np.ones(7, dtype=bool)) is None


def test_sequence_evaluation_uses_visible_frames(out_of_view_sequence):
    sequence = out_of_view_sequence
    evaluation, success, _ = evaluate_sequence(_records(sequence.boxes), sequence)
    assert evaluation.frames == int(sequence.visible.sum())
    assert evaluation.success_auc == pytest.approx(1.0)
    assert evaluation.reacquired is True
    assert "out_of_view" in evaluation.attributes and "distractor" in evaluation.attributes
    assert sequence_attributes(sequence) == evaluation.attributes


def test_run_evaluator_writes_outputs(out_of_view_sequence, plain_sequence, blob_manager, tmp_path):
    tracks = tmp_path / "tracks"
    blob_manager.mkdir(tracks)
    for sequence in (out_of_view_sequence, plain_sequence):
        rows = [r.csv_row() for r in _records(sequence.boxes)]
        blob_manager.save_blob_as_csv(rows, tracks / f"{sequence.name}.csv", TRACK_CSV_FIELDS)

    evaluator = RunEvaluator(blob_manager)
    report, success, precision = evaluator.evaluate(tracks, [out_of_view_sequence, plain_sequence], "perfect")
    assert report.success_auc == pytest.approx(1.0, abs=0.02)
    assert report.reacquisition_rate == 1.0
    assert report.precision_threshold == pytest.approx(20 * precision_scale((48, 64)))

    out = evaluator.save(report, success, precision, tmp_path / "evaluation")
    for name in ("success_curve.csv", "precision_curve.csv", "evaluation.json", "report.md", "curves.png"):
        assert (out / name).exists(), name
    saved = json.loads((out / "evaluation.json").read_text(encoding="utf-8"))
    assert saved["label"] == "perfect"
    assert "perfect" in (out / "report.md").read_text(encoding="utf-8")


def test_run_evaluator_requires_track_output(plain_sequence, blob_manager, tmp_path):
    with pytest.raises(EvaluationError):
        RunEvaluator(blob_manager).evaluate(tmp_path, [plain_sequence])
