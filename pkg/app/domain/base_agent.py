from abc import ABC, abstractmethod
from functools import partial
from typing import Any

from langgraph.checkpoint.memory import MemorySaver
from langgraph.graph.state import CompiledStateGraph

from app.core.logging import LogLevel, log


class LangGraphAgent(ABC):
    """ノードを並べたグラフを1度だけコンパイルし、スレッド単位で実行する."""

    def __init__(
        self,
        log_level: LogLevel,
        checkpointer: MemorySaver | None,
        recursion_limit: int,
    ) -> None:
        self.log = partial(log, log_level=log_level, subject=self.__name__)
        self.checkpointer = checkpointer
        self.recursion_limit = recursion_limit
        self.graph = self._create_graph()

    @property
    def __name__(self) -> str:
        return str(self.__class__.__name__)

    @abstractmethod
    def _create_graph(self) -> CompiledStateGraph:
        raise NotImplementedError

    def invocation_config(self, thread_id: str) -> dict[str, Any]:
        return {"recursion_limit": self.recursion_limit, "configurable": {"thread_id": thread_id}}

    def invoke(self, input_data: dict[str, Any], thread_id: str = "default") -> dict[str, Any]:
        """入力状態からグラフを最後まで実行し、最終状態を返す.

        Args:
        ----
            input_data: 入力状態の値
            thread_id: チェックポイントのスレッドID

        Returns:
        -------
            実行後の状態
        """
        self.log(object="invoke", message=f"start thread={thread_id} recursion_limit={self.recursion_limit}")
        result = self.graph.invoke(input=input_data, config=self.invocation_config(thread_id))
        self.log(object="invoke", message=f"done thread={thread_id}")
        return result
