"""State management for the ablation sweep graph."""

import operator
from typing import Annotated, Any

from pydantic import BaseModel, Field

from app.domain.enums import BaseEnum, TaskStatus


class SweepKind(BaseEnum):
    LAMBDA = "lambda"  # トリプレット損失の重み λ
    NODES = "nodes"  # 1グラフあたりのノード数（0 はGCNなし）
    DEPTH = "depth"  # GCNの層数
    COMPONENTS = "components"  # ベースライン / +GCN / +言語 / 両方


class AblationSetting(BaseModel):
    """スイープの1設定（1シード分）."""

    label: str = Field(title="設定名")
    value: float | None = Field(default=None, title="スイープ変数の値（プロット用）")
    seed: int = Field(title="乱数シード")
    overrides: dict[str, Any] = Field(default_factory=dict, title="RunConfigへの上書き")


class SettingResult(BaseModel):
    """1設定の実行結果."""

    label: str = Field(title="設定名")
    value: float | None = Field(default=None, title="スイープ変数の値")
    seed: int = Field(title="乱数シード")
    status: TaskStatus = Field(title="実行状態")
    success_auc: float | None = Field(default=None, title="成功率曲線のAUC")
    precision: float | None = Field(default=None, title="代表閾値での精度")
    reacquisition_rate: float | None = Field(default=None, title="再捕捉率")
    message: str = Field(default="", title="失敗時のメッセージ")


class AblationAgentInputState(BaseModel):
    """AblationAgentの入力状態."""

    sweep: SweepKind = Field(title="スイープの種類")
    seeds: list[int] = Field(default_factory=lambda: [0], title="各設定で回すシード")
    base_config: dict[str, Any] = Field(
        default_factory=dict,
        title="基本設定",
        description="RunConfigの値（設定ファイル + CLI上書き）",
    )
    values: list[float] | None = Field(
        default=None,
        title="スイープする値",
        description="省略時は λ なら 0〜1 の7点、ノード数なら 0〜70 の7点、GCN層数なら 2, 3, 5, 8",
    )
    output_dir: str = Field(title="出力ディレクトリ")


class AblationAgentPrivateState(BaseModel):
    """AblationAgentの内部状態."""

    settings: list[AblationSetting] = Field(default_factory=list, title="実行する設定の列")
    cursor: int = Field(default=0, title="次に実行する設定の番号")
    attention_dir: str | None = Field(default=None, title="共有するGPGNetの実行ディレクトリ")
    salnet_dir: str | None = Field(default=None, title="現在の設定のSALNet実行ディレクトリ")
    tracks_dir: str | None = Field(default=None, title="現在の設定の追跡結果ディレクトリ")
    error_message: str | None = Field(default=None, title="現在の設定で起きたエラー")
    error_messages: Annotated[list[str], operator.add] = Field(
        default_factory=list, title="エラーメッセージリスト"
    )


class AblationAgentOutputState(BaseModel):
    """AblationAgentの出力状態."""

    results: Annotated[list[SettingResult], operator.add] = Field(
        default_factory=list, title="設定ごとの結果"
    )
    report_path: str | None = Field(default=None, title="Markdownレポートのパス")


class AblationAgentState(
    AblationAgentInputState,
    AblationAgentPrivateState,
    AblationAgentOutputState,
):
    """AblationAgentの完全な状態."""
