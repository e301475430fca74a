"""Node for tracking the test split with the current setting's model."""

from typing import Any

from app.core.exception import BaseError
from app.tracking_workflow.models.state import AblationAgentState
from app.tracking_workflow.nodes.base_node import SettingNode
from app.tracking_workflow.pipeline import track_corpus


class TrackSettingNode(SettingNode):
    def __call__(self, state: AblationAgentState) -> dict[str, Any]:
        if state.error_message is not None:
            return {}
        try:
            config = self.current_config(state).model_copy(update={"salnet_checkpoint": state.salnet_dir})
            run = track_corpus(config, self.blob_manager, self.setting_dir(state) / "tracks")
        except BaseError as e:
            return self.fail(e)
        failures = sum(s.failures for s in run.summaries)
        self.log_start(f"tracked {len(run.summaries)} sequences ({failures} failure frames)")
        return {"tracks_dir": str(run.out_dir)}
