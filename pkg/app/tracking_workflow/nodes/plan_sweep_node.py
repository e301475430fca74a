"""Node for expanding a sweep request into concrete settings."""

from typing import Any

from app.core.exception import ConfigError
from app.tracking_workflow.constants import GCN_DEPTH_SWEEP, LAMBDA_SWEEP, NODE_COUNT_SWEEP
from app.tracking_workflow.models.state import AblationAgentState, AblationSetting, SweepKind
from app.tracking_workflow.nodes.base_node import BaseNode

# 構成要素の切り替え（値はプロット上の順番）
COMPONENT_SETTINGS: dict[str, dict[str, Any]] = {
    "baseline": {"use_gcn": False, "use_language": False, "local_only": True},
    "gcn": {"use_gcn": True, "use_language": False, "local_only": True},
    "gcn_triplet": {"use_gcn": True, "use_language": True, "local_only": True},
    "full": {"use_gcn": True, "use_language": True, "local_only": False},
}


def sweep_settings(
    sweep: SweepKind, seeds: list[int], values: list[float] | None = None
) -> list[AblationSetting]:
    """スイープの種類と値から、（値 × シード）の設定列を作る.

    λ・ノード数・GCN層数のスイープは局所候補のみで回し、学習側の効果だけを比べる。
    """
    if not seeds:
        raise ConfigError("sweep_settings", "seeds", "at least one seed is required")
    entries: list[tuple[str, float, dict[str, Any]]] = []
    if sweep == SweepKind.LAMBDA:
        for value in values or LAMBDA_SWEEP:
            entries.append((f"lambda_{value:g}", float(value), {
                "triplet_lambda": value, "use_language": True, "local_only": True,
            }))
    elif sweep == SweepKind.NODES:
        for value in values or NODE_COUNT_SWEEP:
            count = int(value)
            entries.append((f"nodes_{count}", float(count), {"node_count": count, "local_only": True}))
    elif sweep == SweepKind.DEPTH:
        for value in values or GCN_DEPTH_SWEEP:
            depth = int(value)
            entries.append((f"depth_{depth}", float(depth), {"gcn_depth": depth, "use_gcn": True, "local_only": True}))
    else:
        if values:
            raise ConfigError("sweep_settings", "values", "the components sweep takes no values")
        for index, (label, overrides) in enumerate(COMPONENT_SETTINGS.items()):
            entries.append((label, float(index), overrides))
    return [
        AblationSetting(label=label, value=value, seed=seed, overrides=overrides)
        for label, value, overrides in entries
        for seed in seeds
    ]


class PlanSweepNode(BaseNode):
    """入力から実行する設定の列を決めるノード."""

    def __call__(self, state: AblationAgentState) -> dict[str, Any]:
        settings = sweep_settings(state.sweep, state.seeds, state.values)
        labels = sorted({s.label for s in settings})
        self.log_start(f"{state.sweep.value} sweep: {len(settings)} runs ({', '.join(labels)})")
        self.blob_manager.mkdir(state.output_dir)
        return {"settings": settings, "cursor": 0}
