"""Run-level evaluation: per-sequence metrics, attribute breakdown, report and plots."""

from functools import partial
from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure
from pydantic import BaseModel, Field

from app.core.config import settings
from app.core.exception import EvaluationError
from app.core.logging import LogLevel, log
from app.core.utils.datetime_utils import get_current_time
from app.infrastructure.blob_manager import BaseBlobManager
from app.tracking_workflow.constants import PRECISION_HEADLINE
from app.tracking_workflow.evaluation.metrics import (
    Curve,
    mean_curve,
    precision_curve,
    precision_scale,
    reacquired,
    success_curve,
)
from app.tracking_workflow.synthcorpus import SequenceData
from app.tracking_workflow.tracker import FrameRecord, read_track_csv

REPORT_TEMPLATE = "eval_report.jinja"
ATTRIBUTES = ("occlusion", "out_of_view", "deformation", "distractor")


class SequenceEvaluation(BaseModel):
    sequence: str = Field(title="シーケンス名")
    frames: int = Field(title="評価対象フレーム数（不可視フレームを除く）")
    success_auc: float = Field(title="成功率曲線のAUC")
    precision: float = Field(title="代表閾値での精度")
    reacquired: bool | None = Field(default=None, title="再出現後に再捕捉できたか")
    attributes: list[str] = Field(default_factory=list, title="シーケンスの属性")


class AttributeScore(BaseModel):
    attribute: str = Field(title="属性")
    sequences: int = Field(title="該当シーケンス数")
    success_auc: float = Field(title="平均AUC")
    precision: float = Field(title="平均精度")


class EvaluationReport(BaseModel):
    """実行1回分の評価結果."""

    label: str = Field(title="実行名")
    sequences: list[SequenceEvaluation] = Field(default_factory=list, title="シーケンスごとの結果")
    success_auc: float = Field(title="全体のAUC")
    precision: float = Field(title="全体の精度")
    precision_threshold: float = Field(title="精度の代表閾値（ピクセル）")
    reacquisition_rate: float | None = Field(default=None, title="再捕捉率")
    attributes: list[AttributeScore] = Field(default_factory=list, title="属性別の結果")


def sequence_attributes(sequence: SequenceData) -> list[str]:
    flags = {
        "occlusion": bool(sequence.occluded.any()),
        "out_of_view": bool(sequence.out_of_view.any()),
        "deformation": bool(sequence.deformed.any()),
        "distractor": sequence.has_distractor,
    }
    return [name for name in ATTRIBUTES if flags[name]]


def records_to_boxes(records: list[FrameRecord], length: int) -> np.ndarray:
    if len(records) != length:
        raise EvaluationError("records_to_boxes", "length", f"{len(records)} records for {length} frames")
    return np.array([[r.x, r.y, r.w, r.h] for r in sorted(records, key=lambda r: r.frame)])


def evaluate_sequence(
    records: list[FrameRecord], sequence: SequenceData
) -> tuple[SequenceEvaluation, Curve, Curve]:
    pred = records_to_boxes(records, len(sequence))
    success = success_curve(pred, sequence.boxes, sequence.visible)
    precision = precision_curve(pred, sequence.boxes, sequence.visible, precision_scale(sequence.frame_size))
    evaluation = SequenceEvaluation(
        sequence=sequence.name,
        frames=int(sequence.visible.sum()),
        success_auc=success.summary,
        precision=precision.summary,
        reacquired=reacquired(pred, sequence.boxes, sequence.visible),
        attributes=sequence_attributes(sequence),
    )
    return evaluation, success, precision


class RunEvaluator:
    """追跡結果CSVのディレクトリと正解コーパスを突き合わせて評価する."""

    def __init__(self, blob_manager: BaseBlobManager, log_level: LogLevel = LogLevel.INFO) -> None:
        self.blob_manager = blob_manager
        self.log = partial(log, log_level=log_level, subject=self.__class__.__name__)

    def evaluate(
        self, tracks_dir: str | Path, sequences: list[SequenceData], label: str | None = None
    ) -> tuple[EvaluationReport, Curve, Curve]:
        tracks_dir = Path(tracks_dir)
        evaluations: list[SequenceEvaluation] = []
        successes: list[Curve] = []
        precisions: list[Curve] = []
        for sequence in sequences:
            path = tracks_dir / f"{sequence.name}.csv"
            if not self.blob_manager.exists(path):
                raise EvaluationError(self.__class__.__name__, "evaluate", f"no track output for {sequence.name}")
            evaluation, success, precision = evaluate_sequence(read_track_csv(self.blob_manager, path), sequence)
            evaluations.append(evaluation)
            successes.append(success)
            precisions.append(precision)
        if not evaluations:
            raise EvaluationError(self.__class__.__name__, "evaluate", "no sequence to evaluate")

        overall_success = mean_curve(successes)
        overall_precision = mean_curve(precisions)
        outcomes = [e.reacquired for e in evaluations if e.reacquired is not None]
        report = EvaluationReport(
            label=label or tracks_dir.name,
            sequences=evaluations,
            success_auc=overall_success.summary,
            precision=overall_precision.summary,
            precision_threshold=float(overall_precision.thresholds[PRECISION_HEADLINE]),
            reacquisition_rate=float(np.mean(outcomes)) if outcomes else None,
            attributes=attribute_breakdown(evaluations),
        )
        self.log(object=report.label, message=(
            f"AUC={report.success_auc:.4f} precision={report.precision:.4f} "
            f"reacquisition={report.reacquisition_rate}"
        ))
        return report, overall_success, overall_precision

    def save(self, report: EvaluationReport, success: Curve, precision: Curve, out_dir: str | Path) -> Path:
        """曲線CSV、要約JSON、Markdownレポート、PNGプロットを書き出す."""
        out_dir = Path(out_dir)
        self.blob_manager.mkdir(out_dir)
        self.blob_manager.save_blob_as_csv(success.rows(), out_dir / "success_curve.csv", ["threshold", "value"])
        self.blob_manager.save_blob_as_csv(precision.rows(), out_dir / "precision_curve.csv", ["threshold", "value"])
        self.blob_manager.save_blob_as_json(report.model_dump(), out_dir / "evaluation.json")
        self.blob_manager.save_blob_as_str(render_report(self.blob_manager, report), out_dir / "report.md")
        plot_curves(self.blob_manager, {report.label: (success, precision)}, out_dir / "curves.png")
        return out_dir


def attribute_breakdown(evaluations: list[SequenceEvaluation]) -> list[AttributeScore]:
    scores = []
    for attribute in ATTRIBUTES:
        members = [e for e in evaluations if attribute in e.attributes]
        if not members:
            continue
        scores.append(AttributeScore(
            attribute=attribute,
            sequences=len(members),
            success_auc=float(np.mean([e.success_auc for e in members])),
            precision=float(np.mean([e.precision for e in members])),
        ))
    return scores


def render_report(blob_manager: BaseBlobManager, report: EvaluationReport) -> str:
    template = blob_manager.read_blob_as_template(Path(settings.TEMPLATE_DIR) / REPORT_TEMPLATE)
    return template.render(report=report, generated_at=get_current_time())


def plot_curves(
    blob_manager: BaseBlobManager,
    curves: dict[str, tuple[Curve, Curve]],
    path: str | Path,
) -> None:
    """成功率曲線と精度曲線を左右に並べたPNG. 凡例には AUC / 代表値を添える."""
    fig = Figure(figsize=(10, 4))
    canvas = FigureCanvasAgg(fig)
    ax_success, ax_precision = fig.subplots(1, 2)
    for label, (success, precision) in curves.items():
        ax_success.plot(success.thresholds, success.values, label=f"{label} [{success.summary:.3f}]")
        ax_precision.plot(precision.thresholds, precision.values, label=f"{label} [{precision.summary:.3f}]")
    ax_success.set(title="Success plot", xlabel="Overlap threshold", ylabel="Success rate", xlim=(0, 1), ylim=(0, 1))
    ax_precision.set(title="Precision plot", xlabel="Location error threshold (px)", ylabel="Precision", ylim=(0, 1))
    for ax in (ax_success, ax_precision):
        ax.grid(alpha=0.3)
        ax.legend(loc="lower right" if ax is ax_precision else "upper right", fontsize=8)
    fig.tight_layout()
    canvas.draw()
    image = np.asarray(canvas.buffer_rgba())[:, :, :3].copy()
    blob_manager.save_blob_as_image(image, path)
