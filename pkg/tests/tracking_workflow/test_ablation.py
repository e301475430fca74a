import csv

import numpy as np
import pytest
from langgraph.checkpoint.memory import InMemorySaver

from app.core.exception import ConfigError
from app.domain.enums import TaskStatus
from app.tracking_workflow.agent import (
    AblationAgent,
    next_step,
    required_recursion_limit,
)
from app.tracking_workflow.constants import GCN_DEPTH_SWEEP, LAMBDA_SWEEP, NODE_COUNT_SWEEP
from app.tracking_workflow.models.state import (
    AblationAgentInputState,
    AblationAgentState,
    AblationSetting,
    SettingResult,
    SweepKind,
)
from app.tracking_workflow.nodes import (
    COMPONENT_SETTINGS,
    EvaluateSettingNode,
    plot_summaries,
    summarize_results,
    sweep_settings,
)


def test_lambda_sweep_defaults_and_labels():
    settings = sweep_settings(SweepKind.LAMBDA, [0, 1])
    assert len(settings) == 2 * len(LAMBDA_SWEEP)
    assert settings[0].label == "lambda_0" and settings[0].seed == 0
    assert settings[1].label == "lambda_0" and settings[1].seed == 1
    assert all(s.overrides["local_only"] and s.overrides["use_language"] for s in settings)
    assert {s.overrides["triplet_lambda"] for s in settings} == set(LAMBDA_SWEEP)


def test_node_sweep_includes_graph_free_baseline():
    settings = sweep_settings(SweepKind.NODES, [0])
    assert [s.overrides["node_count"] for s in settings] == list(NODE_COUNT_SWEEP)
    assert settings[0].label == "nodes_0"
    assert [s.label for s in sweep_settings(SweepKind.NODES, [0], [20.0])] == ["nodes_20"]


def test_depth_sweep_overrides_gcn_layers():
    settings = sweep_settings(SweepKind.DEPTH, [0, 1])
    assert [s.overrides["gcn_depth"] for s in settings[::2]] == list(GCN_DEPTH_SWEEP) == [2, 3, 5, 8]
    assert settings[0].label == "depth_2" and settings[0].value == 2.0
    assert all(s.overrides["local_only"] and s.overrides["use_gcn"] for s in settings)
    assert [s.label for s in sweep_settings(SweepKind.DEPTH, [0], [4.0])] == ["depth_4"]


def test_component_sweep_covers_each_combination():
    settings = sweep_settings(SweepKind.COMPONENTS, [3])
    assert [s.label for s in settings] == list(COMPONENT_SETTINGS)
    assert [s.value for s in settings] == [0.0, 1.0, 2.0, 3.0]
    assert not settings[-1].overrides["local_only"]
    with pytest.raises(ConfigError):
        sweep_settings(SweepKind.COMPONENTS, [0], [1.0])


def test_sweep_requires_a_seed():
    with pytest.raises(ConfigError):
        sweep_settings(SweepKind.LAMBDA, [])


def test_summaries_average_completed_seeds():
    results = [
        SettingResult(label="a", value=0.0, seed=0, status=TaskStatus.COMPLETED, success_auc=0.4, precision=0.5),
        SettingResult(label="a", value=0.0, seed=1, status=TaskStatus.COMPLETED, success_auc=0.6, precision=0.7),
        SettingResult(label="b", value=1.0, seed=0, status=TaskStatus.FAILED, message="boom"),
    ]
    a, b = summarize_results(results)
    assert a.runs == 2 and a.failed == 0
    assert a.success_auc_mean == pytest.approx(0.5)
    assert a.success_auc_std == pytest.approx(0.1)
    assert b.runs == 0 and b.failed == 1 and b.success_auc_mean is None


@pytest.mark.parametrize("sweep", list(SweepKind))
def test_plot_summaries_returns_rgb_image(sweep):
    results = [
        SettingResult(label=f"s{i}", value=float(i), seed=0, status=TaskStatus.COMPLETED,
                      success_auc=0.1 * i, precision=0.2)
        for i in range(3)
    ]
    image = plot_summaries(summarize_results(results), sweep)
    assert image.ndim == 3 and image.shape[2] == 3
    assert image.dtype == np.uint8


def test_next_step_loops_until_every_setting_ran():
    setting = AblationSetting(label="a", seed=0)
    state = AblationAgentState(sweep=SweepKind.LAMBDA, output_dir="out", settings=[setting, setting], cursor=1)
    assert next_step(state) == "train_setting"
    assert next_step(state.model_copy(update={"cursor": 2})) == "write_report"
    assert required_recursion_limit(200) > 3 * 200


def test_agent_invocation_config_carries_recursion_limit(blob_manager):
    agent = AblationAgent(blob_manager, recursion_limit=required_recursion_limit(70))
    assert agent.invocation_config("nodes") == {
        "recursion_limit": required_recursion_limit(70), "configurable": {"thread_id": "nodes"},
    }


def test_failed_setting_is_recorded_and_cursor_advances(blob_manager):
    state = AblationAgentState(
        sweep=SweepKind.LAMBDA, output_dir="out",
        settings=[AblationSetting(label="lambda_0", value=0.0, seed=0)],
        error_message="salnet exploded",
    )
    update = EvaluateSettingNode(blob_manager)(state)
    assert update["cursor"] == 1
    assert update["results"][0].status == TaskStatus.FAILED
    assert update["results"][0].message == "salnet exploded"


def test_lambda_sweep_end_to_end(tiny_config, blob_manager, tmp_path):
    out_dir = tmp_path / "ablation"
    input_data = AblationAgentInputState(
        sweep=SweepKind.LAMBDA,
        seeds=[0],
        values=[0.0, 0.5],
        base_config=tiny_config.model_dump(mode="json", exclude={"seed"}),
        output_dir=str(out_dir),
    )
    agent = AblationAgent(blob_manager, InMemorySaver(), recursion_limit=required_recursion_limit(2))
    result = agent.invoke(input_data.model_dump(), thread_id="test")
    assert [r.label for r in result["results"]] == ["lambda_0", "lambda_0.5"]
    assert all(r.status == TaskStatus.COMPLETED for r in result["results"]), result["error_messages"]
    assert all(0.0 <= r.success_auc <= 1.0 for r in result["results"])
    assert result["report_path"] == str(out_dir / "ablation_report.md")

    with (out_dir / "ablation.csv").open(encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    assert [row["label"] for row in rows] == ["lambda_0", "lambda_0.5"]
    assert (out_dir / "ablation.png").exists()
    assert (out_dir / "lambda_0.5" / "seed0" / "salnet" / "salnet.ckpt").exists()
    assert "lambda_0.5" in (out_dir / "ablation_report.md").read_text(encoding="utf-8")
