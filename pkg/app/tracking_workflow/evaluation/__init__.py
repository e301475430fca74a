from app.tracking_workflow.evaluation.metrics import (
    Curve,
    frame_overlaps,
    iou,
    mean_curve,
    precision_curve,
    precision_scale,
    reacquired,
    reappearance_frames,
    success_curve,
)
from app.tracking_workflow.evaluation.report import (
    AttributeScore,
    EvaluationReport,
    RunEvaluator,
    SequenceEvaluation,
    attribute_breakdown,
    evaluate_sequence,
    plot_curves,
    render_report,
)

__all__ = [
    "AttributeScore",
    "Curve",
    "EvaluationReport",
    "RunEvaluator",
    "SequenceEvaluation",
    "attribute_breakdown",
    "evaluate_sequence",
    "frame_overlaps",
    "iou",
    "mean_curve",
    "plot_curves",
    "precision_curve",
    "precision_scale",
    "reacquired",
    "reappearance_frames",
    "render_report",
    "success_curve",
]
