"""Nodes for the ablation sweep workflow."""

from app.tracking_workflow.nodes.base_node import BaseNode, SettingNode
from app.tracking_workflow.nodes.evaluate_setting_node import EvaluateSettingNode
from app.tracking_workflow.nodes.plan_sweep_node import COMPONENT_SETTINGS, PlanSweepNode, sweep_settings
from app.tracking_workflow.nodes.prepare_attention_node import PrepareAttentionNode
from app.tracking_workflow.nodes.track_setting_node import TrackSettingNode
from app.tracking_workflow.nodes.train_setting_node import TrainSettingNode
from app.tracking_workflow.nodes.write_ablation_report_node import (
    SettingSummary,
    WriteAblationReportNode,
    plot_summaries,
    summarize_results,
)

__all__ = [
    "COMPONENT_SETTINGS",
    "BaseNode",
    "EvaluateSettingNode",
    "PlanSweepNode",
    "PrepareAttentionNode",
    "SettingNode",
    "SettingSummary",
    "TrackSettingNode",
    "TrainSettingNode",
    "WriteAblationReportNode",
    "plot_summaries",
    "summarize_results",
    "sweep_settings",
]
