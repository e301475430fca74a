"""Node for training SALNet under the current setting."""

from typing import Any

from app.core.exception import BaseError
from app.tracking_workflow.models.state import AblationAgentState
from app.tracking_workflow.nodes.base_node import SettingNode
from app.tracking_workflow.pipeline import train_salnet


class TrainSettingNode(SettingNode):
    def __call__(self, state: AblationAgentState) -> dict[str, Any]:
        setting = self.current(state)
        self.log_start(f"[{state.cursor + 1}/{len(state.settings)}] {setting.label} seed={setting.seed}")
        reset = {"salnet_dir": None, "tracks_dir": None, "error_message": None}
        try:
            config = self.current_config(state)
            run_dir = train_salnet(config, self.blob_manager, self.setting_dir(state) / "salnet")
        except BaseError as e:
            return {**reset, **self.fail(e)}
        return {**reset, "salnet_dir": str(run_dir)}
