"""Node for aggregating sweep results into a table, a plot and a report."""

from pathlib import Path
from typing import Any

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure
from pydantic import BaseModel, Field

from app.core.config import settings
from app.core.utils.datetime_utils import get_current_time
from app.domain.enums import TaskStatus
from app.tracking_workflow.models.state import AblationAgentState, SettingResult, SweepKind
from app.tracking_workflow.nodes.base_node import BaseNode

ABLATION_TEMPLATE = "ablation_report.jinja"
ABLATION_CSV_FIELDS = ["label", "value", "seed", "status", "success_auc", "precision", "reacquisition_rate"]


class SettingSummary(BaseModel):
    """1設定のシード平均."""

    label: str = Field(title="設定名")
    value: float | None = Field(default=None, title="スイープ変数の値")
    runs: int = Field(title="完了したシード数")
    failed: int = Field(title="失敗したシード数")
    success_auc_mean: float | None = Field(default=None, title="AUCの平均")
    success_auc_std: float | None = Field(default=None, title="AUCの標準偏差")
    precision_mean: float | None = Field(default=None, title="精度の平均")
    precision_std: float | None = Field(default=None, title="精度の標準偏差")


def summarize_results(results: list[SettingResult]) -> list[SettingSummary]:
    """結果を設定名ごとにまとめる（出現順を保つ）."""
    groups: dict[str, list[SettingResult]] = {}
    for result in results:
        groups.setdefault(result.label, []).append(result)
    summaries = []
    for label, group in groups.items():
        done = [r for r in group if r.status == TaskStatus.COMPLETED]
        auc = [r.success_auc for r in done if r.success_auc is not None]
        precision = [r.precision for r in done if r.precision is not None]
        summaries.append(SettingSummary(
            label=label,
            value=group[0].value,
            runs=len(done),
            failed=len(group) - len(done),
            success_auc_mean=float(np.mean(auc)) if auc else None,
            success_auc_std=float(np.std(auc)) if auc else None,
            precision_mean=float(np.mean(precision)) if precision else None,
            precision_std=float(np.std(precision)) if precision else None,
        ))
    return summaries


def plot_summaries(summaries: list[SettingSummary], sweep: SweepKind) -> np.ndarray:
    """AUCと精度をシード間の標準偏差付きで描いたRGB画像."""
    fig = Figure(figsize=(6, 4))
    canvas = FigureCanvasAgg(fig)
    ax = fig.subplots()
    done = [s for s in summaries if s.success_auc_mean is not None]
    positions = np.arange(len(done)) if sweep == SweepKind.COMPONENTS else np.array([s.value for s in done])
    for key, marker in (("success_auc", "o"), ("precision", "s")):
        means = [getattr(s, f"{key}_mean") for s in done]
        stds = [getattr(s, f"{key}_std") for s in done]
        ax.errorbar(positions, means, yerr=stds, marker=marker, capsize=3, label=key)
    if sweep == SweepKind.COMPONENTS:
        ax.set_xticks(positions, [s.label for s in done])
    xlabel = {
        SweepKind.LAMBDA: "triplet weight",
        SweepKind.NODES: "nodes per graph",
        SweepKind.DEPTH: "GCN layers",
    }.get(sweep, "configuration")
    ax.set(xlabel=xlabel, ylabel="score", ylim=(0, 1), title=f"{sweep.value} sweep")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    canvas.draw()
    return np.asarray(canvas.buffer_rgba())[:, :, :3].copy()


class WriteAblationReportNode(BaseNode):
    """ablation.csv / ablation.json / ablation.png / ablation_report.md を書き出すノード."""

    def __call__(self, state: AblationAgentState) -> dict[str, Any]:
        out_dir = Path(state.output_dir)
        self.blob_manager.mkdir(out_dir)
        summaries = summarize_results(state.results)

        fields = set(ABLATION_CSV_FIELDS)
        rows = [
            {k: ("" if v is None else v) for k, v in r.model_dump(mode="json", include=fields).items()}
            for r in state.results
        ]
        self.blob_manager.save_blob_as_csv(rows, out_dir / "ablation.csv", ABLATION_CSV_FIELDS)
        self.blob_manager.save_blob_as_json(
            {
                "sweep": state.sweep.value,
                "seeds": state.seeds,
                "summaries": [s.model_dump() for s in summaries],
                "results": [r.model_dump(mode="json") for r in state.results],
                "errors": state.error_messages,
            },
            out_dir / "ablation.json",
        )
        if any(s.success_auc_mean is not None for s in summaries):
            self.blob_manager.save_blob_as_image(plot_summaries(summaries, state.sweep), out_dir / "ablation.png")
        else:
            self.log_warning("no completed run, plot skipped")

        template = self.blob_manager.read_blob_as_template(Path(settings.TEMPLATE_DIR) / ABLATION_TEMPLATE)
        report = template.render(
            sweep=state.sweep.value,
            seeds=state.seeds,
            summaries=summaries,
            errors=state.error_messages,
            generated_at=get_current_time(),
        )
        report_path = out_dir / "ablation_report.md"
        self.blob_manager.save_blob_as_str(report, report_path)
        self.log_success(f"report written to {report_path}")
        return {"report_path": str(report_path)}
