"""Run configuration for the language-guided tracking workflow."""

from pathlib import Path
from typing import Any

from pydantic import BaseModel, Field, ValidationError, model_validator

from app.core.exception import ConfigError
from app.domain.enums import AttentionCue
from app.tracking_workflow.constants import DEFAULT_SAMPLES_PER_GRAPH, REFERENCE_FEATURE_DIM


class RunConfig(BaseModel):
    """実験全体の設定.

    全フィールドは設定ファイルとCLIフラグで上書きできる。
    """

    # 共通
    seed: int = Field(default=0, title="乱数シード")
    width_scale: float = Field(
        default=1.0 / 16.0,
        title="幅スケール",
        description="参照スケール（512次元）に対する特徴幅の倍率",
    )
    fc_ratio: int = Field(default=4, title="第1全結合層の幅倍率（D に対する）")
    patch_size: int = Field(default=32, title="SALNet入力パッチの一辺")
    conv_channels: tuple[int, int, int] = Field(
        default=(8, 16, 32), title="SALNet畳み込み層のチャネル数"
    )
    dropout_rate: float = Field(default=0.5, title="全結合層のドロップアウト率")

    # 関係グラフ
    node_count: int = Field(default=32, title="1グラフあたりのノード（サンプル）数")
    gcn_depth: int = Field(default=3, title="GCN層数")
    single_normalization: bool = Field(default=False, title="関係行列の再正規化を省略")
    use_gcn: bool = Field(default=True, title="GCN特徴強調を使う")

    # 損失
    use_language: bool = Field(default=True, title="トリプレット損失（言語）を使う")
    triplet_lambda: float = Field(default=0.1, title="トリプレット損失の重み λ")
    triplet_margin: float = Field(default=1.0, title="トリプレットのマージン α")
    max_triplets: int = Field(default=64, title="1グラフあたりのトリプレット上限")
    positive_fraction: float = Field(default=0.25, title="グラフ内の正例の割合")

    # SALNet学習
    salnet_lr: float = Field(default=1e-4, title="SALNet学習率（Adam）")
    salnet_batch_graphs: int = Field(default=8, title="1ステップあたりのグラフ数")
    salnet_iterations: int = Field(default=200, title="SALNet最適化ステップ数")

    # GPGNet
    frame_height: int = Field(default=48, title="GPGNet入力の高さ")
    frame_width: int = Field(default=64, title="GPGNet入力の幅")
    encoder_channels: tuple[int, int, int] = Field(
        default=(8, 16, 32), title="GPGNetエンコーダ前段のチャネル数"
    )
    gpgnet_lr: float = Field(default=5e-5, title="GPGNet学習率（Adagrad）")
    gpgnet_batch_size: int = Field(default=20, title="GPGNetバッチサイズ")
    gpgnet_epochs: int = Field(default=50, title="GPGNetエポック数")
    gpgnet_frames_per_sequence: int = Field(
        default=4, title="1エポックで各シーケンスから使うフレーム数"
    )

    # 候補生成
    attention_threshold: float = Field(default=0.5, title="アテンション二値化閾値 τ")
    min_region_area: int = Field(default=4, title="アテンション領域の最小面積")
    sigma_xy: float = Field(default=0.3, title="位置のガウス標準偏差（ボックスサイズ比）")
    sigma_scale: float = Field(default=0.5, title="スケールのガウス標準偏差（1.05の指数）")
    n_local: int = Field(default=256, title="局所候補数")
    n_per_region: int = Field(default=8, title="アテンション領域あたりの大域候補数")
    max_global: int = Field(default=64, title="大域候補の上限")
    pool_size: int = Field(default=320, title="候補プールの上限 N")

    # オンライン追跡
    n_init_pos: int = Field(default=500, title="初期化の正例数")
    n_init_neg: int = Field(default=5000, title="初期化の負例数")
    init_steps: int = Field(default=30, title="初期化の勾配ステップ数")
    n_update_pos: int = Field(default=50, title="成功フレームで集める正例数")
    n_update_neg: int = Field(default=200, title="成功フレームで集める負例数")
    long_interval: int = Field(default=10, title="長期更新の間隔（フレーム）")
    long_memory: int = Field(default=100, title="長期メモリ容量（フレーム）")
    short_memory: int = Field(default=20, title="短期メモリ容量（フレーム）")
    update_steps: int = Field(default=10, title="更新1回あたりの勾配ステップ数")
    online_fc_lr: float = Field(default=1e-4 / 3, title="オンライン更新のfc学習率")
    online_head_lr: float = Field(default=1e-3 / 3, title="オンライン更新のヘッド学習率")
    online_batch_pos: int = Field(default=32, title="オンライン更新の正例バッチ")
    online_batch_neg: int = Field(default=96, title="オンライン更新の負例バッチ")
    attention_stride: int = Field(default=1, title="アテンション再計算の間隔（フレーム）")
    attention_cue: AttentionCue = Field(default=AttentionCue.JOINT, title="アテンションの手がかり")
    local_only: bool = Field(default=False, title="大域候補を使わない")
    dump_candidates: bool = Field(default=False, title="候補プールをJSON Linesで書き出す（デバッグ用）")

    # 合成コーパス
    n_train_sequences: int = Field(default=200, title="学習シーケンス数")
    n_test_sequences: int = Field(default=50, title="テストシーケンス数")
    frames_per_sequence: int = Field(default=40, title="シーケンスあたりのフレーム数")

    # パス
    corpus_dir: str = Field(default="storage/corpus", title="コーパスのルート")
    output_dir: str = Field(default="storage/outputs", title="出力ディレクトリ")
    salnet_checkpoint: str | None = Field(default=None, title="SALNetチェックポイント")
    gpgnet_checkpoint: str | None = Field(default=None, title="GPGNetチェックポイント")

    log_every: int = Field(default=10, title="学習ログの出力間隔")

    @model_validator(mode="after")
    def _validate(self) -> "RunConfig":
        if self.triplet_lambda < 0:
            raise ValueError(f"triplet_lambda must be >= 0 (got {self.triplet_lambda})")
        if not 0.0 < self.attention_threshold < 1.0:
            raise ValueError(
                f"attention_threshold must be in (0, 1) (got {self.attention_threshold})"
            )
        if self.gcn_depth < 1:
            raise ValueError(f"gcn_depth must be >= 1 (got {self.gcn_depth})")
        for name in ("salnet_lr", "gpgnet_lr", "online_fc_lr", "online_head_lr", "width_scale"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0 (got {getattr(self, name)})")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must be in [0, 1) (got {self.dropout_rate})")
        if self.frame_height % 16 or self.frame_width % 16:
            raise ValueError("frame_height and frame_width must be multiples of 16")
        if self.node_count == 1 or self.node_count < 0:
            raise ValueError(f"node_count must be 0 (graph disabled) or >= 2 (got {self.node_count})")
        return self

    @property
    def feature_dim(self) -> int:
        """特徴幅 D（参照スケールでは512）."""
        return max(1, round(REFERENCE_FEATURE_DIM * self.width_scale))

    @property
    def gcn_enabled(self) -> bool:
        """node_count = 0 はGCNなしのベースラインとして扱う."""
        return self.use_gcn and self.node_count > 0

    @property
    def samples_per_graph(self) -> int:
        return self.node_count if self.node_count > 0 else DEFAULT_SAMPLES_PER_GRAPH

    @property
    def fc1_dim(self) -> int:
        return self.fc_ratio * self.feature_dim

    @property
    def frame_shape(self) -> tuple[int, int]:
        return (self.frame_height, self.frame_width)


def _parse_value(raw: str) -> Any:
    """設定ファイルの値文字列をpydanticに渡せる形に変換."""
    value = raw.strip()
    if value.lower() in ("none", "null", ""):
        return None
    if "," in value:
        return tuple(item.strip() for item in value.split(",") if item.strip())
    return value


def parse_run_config_text(text: str) -> dict[str, Any]:
    """`key = value` 形式のテキストを辞書に変換.

    Args:
    ----
        text: 設定ファイルの内容（`#` 以降はコメント）

    Returns:
    -------
        キーと値の辞書
    """
    values: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("RunConfig", f"line {lineno}", f"expected 'key = value': {line!r}")
        key, raw = line.split("=", 1)
        values[key.strip()] = _parse_value(raw)
    return values


def build_run_config(values: dict[str, Any], overrides: dict[str, Any] | None = None) -> RunConfig:
    """設定値とCLI上書きからRunConfigを構築.

    Args:
    ----
        values: 設定ファイル由来の値
        overrides: CLIフラグ由来の値（Noneは無視）

    Returns:
    -------
        検証済みのRunConfig
    """
    merged = dict(values)
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = sorted(set(merged) - set(RunConfig.model_fields))
    if unknown:
        raise ConfigError("RunConfig", "keys", f"unknown keys: {', '.join(unknown)}")
    try:
        return RunConfig.model_validate(merged)
    except ValidationError as e:
        raise ConfigError("RunConfig", "values", str(e)) from e


def load_run_config(
    path: str | Path | None = None, overrides: dict[str, Any] | None = None
) -> RunConfig:
    """設定ファイルを読み込み、CLIの上書きを適用."""
    values = parse_run_config_text(Path(path).read_text(encoding="utf-8")) if path else {}
    return build_run_config(values, overrides)


def dump_run_config(config: RunConfig) -> str:
    """RunConfigを `key = value` 形式のテキストに変換."""
    lines = []
    for key, value in config.model_dump(mode="json").items():
        if isinstance(value, list):
            value = ", ".join(str(v) for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
