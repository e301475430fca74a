"""Structure-aware local network: shared backbone, GCN stack, per-domain heads."""

import numpy as np

from app.core.exception import ConfigError, NumericsError
from app.tracking_workflow.config import RunConfig
from app.tracking_workflow.language import SentenceEncoder
from app.tracking_workflow.numerics import (
    Conv2d,
    Dropout,
    Flatten,
    LayerKind,
    LayerSpec,
    Linear,
    Module,
    ReLU,
    Sequential,
    SoftmaxRows,
)
from app.tracking_workflow.relgraph import GcnStack

# (名前, カーネル, ストライド, パディング)
CONV_LAYOUT = (("conv1", 5, 2, 2), ("conv2", 3, 2, 1), ("conv3", 3, 1, 1))

# 特徴抽出のチャンクサイズ（im2colのメモリ上限）
FEATURE_CHUNK = 256


def conv_output_size(size: int) -> int:
    for _, kernel, stride, padding in CONV_LAYOUT:
        size = (size + 2 * padding - kernel) // stride + 1
    return size


def build_conv_stack(config: RunConfig, rng: np.random.Generator) -> Sequential:
    layers = []
    in_channels = 3
    for i, ((name, kernel, stride, padding), out_channels) in enumerate(
        zip(CONV_LAYOUT, config.conv_channels, strict=True), 1
    ):
        layers += [
            Conv2d(name, in_channels, out_channels, kernel, rng, stride=stride, padding=padding),
            ReLU(f"relu{i}"),
        ]
        in_channels = out_channels
    layers.append(Flatten("flatten"))
    return Sequential("conv", layers)


def build_fc_stack(config: RunConfig, in_features: int, rng: np.random.Generator) -> Sequential:
    return Sequential(
        "fc",
        [
            Linear("fc4", in_features, config.fc1_dim, rng),
            ReLU("relu4"),
            Dropout("drop4", config.dropout_rate),
            Linear("fc5", config.fc1_dim, config.feature_dim, rng),
            ReLU("relu5"),
            Dropout("drop5", config.dropout_rate),
        ],
    )


def build_head(name: str, in_features: int, rng: np.random.Generator) -> Sequential:
    """2クラス（列0 = F+、列1 = F-）のsoftmaxヘッド."""
    return Sequential(name, [Linear("fc6", in_features, 2, rng), SoftmaxRows("softmax")])


class SalnetModel(Module):
    """共有層（conv3 + fc2）、学習時のみ使うGCN、ドメインごとの2値ヘッド、文エンコーダ.

    パラメータ名は `conv.conv1.W`、`heads.3.fc6.W`、`language.conv2.b` のように平坦化される。
    """

    def __init__(
        self,
        config: RunConfig,
        num_domains: int,
        vocab_size: int,
        rng: np.random.Generator,
    ) -> None:
        if num_domains < 1:
            raise ConfigError("SalnetModel", "num_domains", f"need >= 1 domain (got {num_domains})")
        self.config = config
        self.patch_size = config.patch_size
        self.feature_dim = config.feature_dim
        spatial = conv_output_size(config.patch_size)
        self.conv_stack = build_conv_stack(config, rng)
        self.fc_stack = build_fc_stack(config, config.conv_channels[-1] * spatial * spatial, rng)
        self.gcn = (
            GcnStack(
                config.feature_dim, rng, depth=config.gcn_depth,
                single_normalization=config.single_normalization,
            )
            if config.gcn_enabled
            else None
        )
        head_width = self.gcn.output_width if self.gcn else config.feature_dim
        self.heads = [build_head(f"head{k}", head_width, rng) for k in range(num_domains)]
        self.language = SentenceEncoder(vocab_size, config.feature_dim, rng)

    def children(self) -> dict[str, Module]:
        children: dict[str, Module] = {"conv": self.conv_stack, "fc": self.fc_stack}
        if self.gcn is not None:
            children["gcn"] = self.gcn
        for k, head in enumerate(self.heads):
            children[f"heads.{k}"] = head
        children["language"] = self.language
        return children

    @property
    def num_domains(self) -> int:
        return len(self.heads)

    def _check_patches(self, patches: np.ndarray) -> None:
        expected = (3, self.patch_size, self.patch_size)
        if patches.ndim != 4 or patches.shape[1:] != expected:
            raise NumericsError(
                "SalnetModel", "backbone_forward",
                f"expected patches (N, {expected[0]}, {expected[1]}, {expected[2]}), got {patches.shape}",
            )

    def backbone_forward(
        self,
        patches: np.ndarray,
        *,
        training: bool = False,
        rng: np.random.Generator | None = None,
    ) -> np.ndarray:
        """パッチ (N, 3, P, P) → 特徴 (N, D). 逆伝播用に活性を保持する."""
        self._check_patches(patches)
        conv = self.conv_stack.forward(patches, training=training, rng=rng)
        return self.fc_stack.forward(conv, training=training, rng=rng)

    def backbone_backward(self, d_feature: np.ndarray) -> np.ndarray:
        return self.conv_stack.backward(self.fc_stack.backward(d_feature))

    def conv_features(self, patches: np.ndarray) -> np.ndarray:
        """凍結した畳み込み層の出力（チャンク単位で計算、活性は保持しない）."""
        self._check_patches(patches)
        chunks = [
            self.conv_stack.forward(patches[i : i + FEATURE_CHUNK])
            for i in range(0, len(patches), FEATURE_CHUNK)
        ]
        return np.concatenate(chunks) if chunks else np.zeros((0, 0))

    def extract_features(self, patches: np.ndarray) -> np.ndarray:
        """推論用の特徴（ドロップアウトなし）."""
        conv = self.conv_features(patches)
        return np.concatenate([
            self.fc_stack.forward(conv[i : i + FEATURE_CHUNK])
            for i in range(0, len(conv), FEATURE_CHUNK)
        ])

    def head(self, domain: int) -> Sequential:
        if not 0 <= domain < len(self.heads):
            raise ConfigError(
                "SalnetModel", "head_score", f"unknown domain {domain} (have {len(self.heads)})"
            )
        return self.heads[domain]

    def head_score(self, features: np.ndarray, domain: int) -> np.ndarray:
        """(N, 2) の (F+, F-)."""
        return self.head(domain).forward(features)

    def specs(self) -> list[LayerSpec]:
        """チェックポイントのマニフェスト用に全層の記述を並べる."""
        specs = [*self.conv_stack.specs(), *self.fc_stack.specs()]
        if self.gcn is not None:
            specs += [
                LayerSpec(name=f"gcn.{key}", kind=LayerKind.FULLY_CONNECTED, param_shapes={key: list(w.shape)})
                for key, w in self.gcn.weights.items()
            ]
        for k, head in enumerate(self.heads):
            specs += [spec.model_copy(update={"name": f"heads.{k}.{spec.name}"}) for spec in head.specs()]
        for name, layer in self.language.children().items():
            specs.append(layer.spec().model_copy(update={"name": f"language.{name}"}))  # type: ignore[attr-defined]
        return specs
