"""Base class for ablation workflow nodes."""

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any

from loguru import logger

from app.core.exception import BaseError
from app.infrastructure.blob_manager import BaseBlobManager
from app.tracking_workflow.config import RunConfig, build_run_config
from app.tracking_workflow.models.state import AblationAgentState, AblationSetting


class BaseNode(ABC):
    """ワークフローノードの基底クラス.

    全てのノードはこのクラスを継承し、__call__メソッドを実装する。
    """

    def __init__(self, blob_manager: BaseBlobManager) -> None:
        self.blob_manager = blob_manager
        self.logger = logger

    @abstractmethod
    def __call__(self, state: AblationAgentState) -> dict[str, Any]:
        """ノードの処理を実行.

        Args:
        ----
            state: 現在のワークフロー状態

        Returns:
        -------
            更新する状態の辞書
        """
        raise NotImplementedError

    @property
    def name(self) -> str:
        return self.__class__.__name__

    def log_start(self, message: str) -> None:
        self.logger.info(f"[{self.name}] {message}")

    def log_success(self, message: str) -> None:
        self.logger.success(f"[{self.name}] {message}")

    def log_error(self, message: str) -> None:
        self.logger.error(f"[{self.name}] {message}")

    def log_warning(self, message: str) -> None:
        self.logger.warning(f"[{self.name}] {message}")


class SettingNode(BaseNode):
    """現在の設定（state.cursor）に対して1段階を実行するノード."""

    def current(self, state: AblationAgentState) -> AblationSetting:
        return state.settings[state.cursor]

    def current_config(self, state: AblationAgentState) -> RunConfig:
        setting = self.current(state)
        overrides = {**setting.overrides, "seed": setting.seed}
        if state.attention_dir is not None:
            overrides.setdefault("gpgnet_checkpoint", state.attention_dir)
        return build_run_config(state.base_config, overrides)

    def setting_dir(self, state: AblationAgentState) -> Path:
        setting = self.current(state)
        return Path(state.output_dir) / setting.label / f"seed{setting.seed}"

    def fail(self, error: BaseError) -> dict[str, Any]:
        self.log_error(str(error))
        return {"error_message": str(error), "error_messages": [str(error)]}
