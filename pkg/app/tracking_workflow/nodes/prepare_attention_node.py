"""Node for preparing the corpus and the shared attention network."""

from pathlib import Path
from typing import Any

from app.core.exception import BaseError
from app.tracking_workflow.config import build_run_config
from app.tracking_workflow.models.state import AblationAgentState
from app.tracking_workflow.nodes.base_node import BaseNode
from app.tracking_workflow.pipeline import synthesize_corpus, train_gpgnet
from app.tracking_workflow.synthcorpus import TEST_SPLIT, TRAIN_SPLIT, CorpusStore


class PrepareAttentionNode(BaseNode):
    """コーパスがなければ生成し、大域候補を使う設定があればGPGNetを1度だけ学習する.

    GPGNetは全設定・全シードで共有する（スイープ対象はSALNet側）。
    """

    def __call__(self, state: AblationAgentState) -> dict[str, Any]:
        config = build_run_config(state.base_config, {"seed": state.seeds[0]})
        store = CorpusStore(self.blob_manager, config.corpus_dir)
        if not all(self.blob_manager.exists(store.root / split) for split in (TRAIN_SPLIT, TEST_SPLIT)):
            self.log_start(f"no corpus under {config.corpus_dir}, synthesizing")
            synthesize_corpus(config, self.blob_manager)

        needs_attention = any(not s.overrides.get("local_only", config.local_only) for s in state.settings)
        if not needs_attention:
            return {"attention_dir": None}
        if config.gpgnet_checkpoint is not None:
            self.log_start(f"reusing GPGNet {config.gpgnet_checkpoint}")
            return {"attention_dir": config.gpgnet_checkpoint}
        try:
            run_dir = train_gpgnet(config, self.blob_manager, Path(state.output_dir) / "gpgnet")
        except BaseError as e:
            # 大域候補なしで続行する（該当設定は局所候補のみになる）
            self.log_error(f"GPGNet training failed: {e}")
            return {"attention_dir": None, "error_messages": [str(e)]}
        self.log_success(f"GPGNet ready at {run_dir}")
        return {"attention_dir": str(run_dir)}
