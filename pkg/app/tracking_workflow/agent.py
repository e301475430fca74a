"""Ablation sweep agent: train, track and evaluate one setting at a time."""

from langgraph.checkpoint.memory import MemorySaver
from langgraph.graph import StateGraph
from langgraph.graph.state import CompiledStateGraph

from app.core.logging import LogLevel
from app.domain.base_agent import LangGraphAgent
from app.infrastructure.blob_manager import BaseBlobManager
from app.tracking_workflow.models.state import AblationAgentInputState, AblationAgentState
from app.tracking_workflow.nodes import (
    EvaluateSettingNode,
    PlanSweepNode,
    PrepareAttentionNode,
    TrackSettingNode,
    TrainSettingNode,
    WriteAblationReportNode,
)

# 1設定あたり train → track → evaluate の3ステップ
STEPS_PER_SETTING = 3
DEFAULT_RECURSION_LIMIT = 200


def next_step(state: AblationAgentState) -> str:
    """未実行の設定が残っていれば学習へ戻る."""
    return "train_setting" if state.cursor < len(state.settings) else "write_report"


class AblationAgent(LangGraphAgent):
    """スイープの各設定についてSALNetを学習し、テスト分割を追跡・評価する.

    GPGNetは最初に1度だけ用意し、全設定で共有する。
    """

    def __init__(
        self,
        blob_manager: BaseBlobManager,
        checkpointer: MemorySaver | None = None,
        log_level: LogLevel = LogLevel.INFO,
        recursion_limit: int = DEFAULT_RECURSION_LIMIT,
    ) -> None:
        self.plan_sweep_node = PlanSweepNode(blob_manager)
        self.prepare_attention_node = PrepareAttentionNode(blob_manager)
        self.train_setting_node = TrainSettingNode(blob_manager)
        self.track_setting_node = TrackSettingNode(blob_manager)
        self.evaluate_setting_node = EvaluateSettingNode(blob_manager)
        self.write_report_node = WriteAblationReportNode(blob_manager)
        super().__init__(
            log_level=log_level,
            checkpointer=checkpointer,
            recursion_limit=recursion_limit,
        )

    def _create_graph(self) -> CompiledStateGraph:
        workflow = StateGraph(
            state_schema=AblationAgentState,
            input_schema=AblationAgentInputState,
        )

        workflow.add_node("plan_sweep", self.plan_sweep_node)
        workflow.add_node("prepare_attention", self.prepare_attention_node)
        workflow.add_node("train_setting", self.train_setting_node)
        workflow.add_node("track_setting", self.track_setting_node)
        workflow.add_node("evaluate_setting", self.evaluate_setting_node)
        workflow.add_node("write_report", self.write_report_node)

        workflow.add_edge("plan_sweep", "prepare_attention")
        workflow.add_conditional_edges(
            "prepare_attention", next_step, {"train_setting": "train_setting", "write_report": "write_report"}
        )
        workflow.add_edge("train_setting", "track_setting")
        workflow.add_edge("track_setting", "evaluate_setting")
        workflow.add_conditional_edges(
            "evaluate_setting", next_step, {"train_setting": "train_setting", "write_report": "write_report"}
        )

        workflow.set_entry_point("plan_sweep")
        workflow.set_finish_point("write_report")

        return workflow.compile(checkpointer=self.checkpointer)


def required_recursion_limit(n_settings: int) -> int:
    """設定数から必要な recursion_limit を見積もる."""
    return max(DEFAULT_RECURSION_LIMIT, STEPS_PER_SETTING * n_settings + 10)
