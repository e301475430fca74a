"""Node for scoring the current setting and advancing the cursor."""

from typing import Any

from app.core.exception import BaseError
from app.domain.enums import TaskStatus
from app.tracking_workflow.models.state import AblationAgentState, SettingResult
from app.tracking_workflow.nodes.base_node import SettingNode
from app.tracking_workflow.pipeline import evaluate_tracks


class EvaluateSettingNode(SettingNode):
    """現在の設定を評価して結果を1件追加し、次の設定へ進める."""

    def __call__(self, state: AblationAgentState) -> dict[str, Any]:
        setting = self.current(state)
        base = {"label": setting.label, "value": setting.value, "seed": setting.seed}
        advance: dict[str, Any] = {"cursor": state.cursor + 1}
        if state.error_message is not None or state.tracks_dir is None:
            message = state.error_message or "no track output"
            failed = SettingResult(**base, status=TaskStatus.FAILED, message=message)
            return {**advance, "results": [failed]}
        try:
            config = self.current_config(state)
            report = evaluate_tracks(
                config, self.blob_manager, state.tracks_dir, label=f"{setting.label}/seed{setting.seed}"
            )
        except BaseError as e:
            failed = SettingResult(**base, status=TaskStatus.FAILED, message=str(e))
            return {**advance, **self.fail(e), "results": [failed]}
        self.log_success(f"{setting.label} seed={setting.seed}: AUC={report.success_auc:.4f}")
        result = SettingResult(
            **base,
            status=TaskStatus.COMPLETED,
            success_auc=report.success_auc,
            precision=report.precision,
            reacquisition_rate=report.reacquisition_rate,
        )
        return {**advance, "results": [result]}
