"""Per-sequence classifier: frozen conv layers, tunable fc layers and a fresh binary head."""

import copy

import numpy as np

from app.tracking_workflow.config import RunConfig
from app.tracking_workflow.numerics import Module, Optimizer, OptimizerKind
from app.tracking_workflow.proposals import crop_patches
from app.tracking_workflow.salnet.losses import mean_bce_grad, mean_bce_loss
from app.tracking_workflow.salnet.model import FEATURE_CHUNK, SalnetModel, build_head


class OnlineClassifier(Module):
    """学習済みSALNetの共有層を複製し、新しい2値ヘッドを付けた追跡用の分類器.

    畳み込み層は凍結し、オンライン更新では fc 層とヘッドだけを動かす。
    メモリには畳み込み層の出力を保存するので、更新時に画像を切り出し直す必要はない。
    """

    def __init__(self, salnet: SalnetModel, config: RunConfig, rng: np.random.Generator) -> None:
        self.config = config
        self.patch_size = salnet.patch_size
        self.conv = copy.deepcopy(salnet.conv_stack)
        self.conv.set_trainable(False)
        self.fc = copy.deepcopy(salnet.fc_stack)
        self.head = build_head("online_head", salnet.feature_dim, rng)
        self.fc_optimizer = Optimizer(OptimizerKind.ADAM, config.online_fc_lr)
        self.head_optimizer = Optimizer(OptimizerKind.ADAM, config.online_head_lr)

    def children(self) -> dict[str, Module]:
        return {"conv": self.conv, "fc": self.fc, "head": self.head}

    def conv_features(self, frame: np.ndarray, boxes: np.ndarray) -> np.ndarray:
        """ボックスを切り出して凍結畳み込み層を通す（チャンク単位）."""
        chunks = [
            self.conv.forward(crop_patches(frame, boxes[i : i + FEATURE_CHUNK], self.patch_size))
            for i in range(0, len(boxes), FEATURE_CHUNK)
        ]
        return np.concatenate(chunks)

    def logits_to_scores(self, conv_features: np.ndarray) -> np.ndarray:
        """(N, 2) の (F+, F-)."""
        features = np.concatenate([
            self.fc.forward(conv_features[i : i + FEATURE_CHUNK])
            for i in range(0, len(conv_features), FEATURE_CHUNK)
        ])
        return self.head.forward(features)

    def score(self, frame: np.ndarray, boxes: np.ndarray) -> np.ndarray:
        """各候補の F+."""
        return self.logits_to_scores(self.conv_features(frame, boxes))[:, 0]

    def fine_tune(
        self,
        positives: np.ndarray,
        negatives: np.ndarray,
        steps: int,
        rng: np.random.Generator,
    ) -> list[float]:
        """正例・負例の特徴から毎ステップ小バッチを引いて fc 層とヘッドを更新する.

        Args:
        ----
            positives: (n_pos, F) の畳み込み特徴
            negatives: (n_neg, F) の畳み込み特徴
            steps: 勾配ステップ数
            rng: バッチ抽出とドロップアウトの乱数

        Returns:
        -------
            各ステップのサンプル平均BCE
        """
        losses = []
        n_pos = min(self.config.online_batch_pos, len(positives))
        n_neg = min(self.config.online_batch_neg, len(negatives))
        labels = np.concatenate([np.ones(n_pos), np.zeros(n_neg)])
        for _ in range(steps):
            batch = np.concatenate([
                positives[rng.choice(len(positives), size=n_pos, replace=False)],
                negatives[rng.choice(len(negatives), size=n_neg, replace=False)],
            ])
            self.zero_grad()
            features = self.fc.forward(batch, training=True, rng=rng)
            probs = self.head.forward(features)
            losses.append(mean_bce_loss(probs[:, 0], labels))
            d_probs = np.zeros_like(probs)
            d_probs[:, 0] = mean_bce_grad(probs[:, 0], labels)
            self.fc.backward(self.head.backward(d_probs))
            self.fc_optimizer.step(self.fc.parameters(), self.fc.gradients())
            self.head_optimizer.step(self.head.parameters(), self.head.gradients())
        return losses
