"""Global proposal generation network.

フレームとターゲットパッチをそれぞれ畳み込みエンコーダで Hf×Wf×C に落とし、
文特徴をトークン方向に最大値プーリングして同じ解像度に敷き詰め、
3C チャネルに連結した特徴をアップサンプリングで元の解像度のアテンションへ戻す。
"""

from dataclasses import dataclass

import numpy as np

from app.core.exception import NumericsError
from app.domain.enums import AttentionCue
from app.tracking_workflow.config import RunConfig
from app.tracking_workflow.language import SentenceEncoder, anchor_backward, anchor_vector
from app.tracking_workflow.numerics import (
    Concat,
    Conv2d,
    LayerSpec,
    Module,
    ReLU,
    Sequential,
    Sigmoid,
    UpsampleConv2d,
)

# エンコーダとデコーダの段数（各段で 2 倍）
NUM_STAGES = 4
DOWNSAMPLE = 2**NUM_STAGES


def build_encoder(name: str, config: RunConfig, rng: np.random.Generator) -> Sequential:
    """stride 2 の 3×3 畳み込み4段. 出力は (N, C, H/16, W/16)."""
    channels = [*config.encoder_channels, config.feature_dim]
    layers = []
    in_channels = 3
    for i, out_channels in enumerate(channels, 1):
        layers += [
            Conv2d(f"conv{i}", in_channels, out_channels, 3, rng, stride=2, padding=1),
            ReLU(f"relu{i}"),
        ]
        in_channels = out_channels
    return Sequential(name, layers)


def build_decoder(config: RunConfig, rng: np.random.Generator) -> Sequential:
    """エンコーダを逆順にたどるアップサンプル畳み込み + 1チャネルの出力層 + sigmoid."""
    channels = [*reversed(config.encoder_channels), config.encoder_channels[0]]
    layers = []
    in_channels = 3 * config.feature_dim
    for i, out_channels in enumerate(channels, 1):
        layers += [
            UpsampleConv2d(f"up{i}", in_channels, out_channels, 3, rng),
            ReLU(f"relu{i}"),
        ]
        in_channels = out_channels
    layers += [Conv2d("score", in_channels, 1, 3, rng), Sigmoid("sigmoid")]
    return Sequential("decoder", layers)


@dataclass
class FusedInputs:
    """encode_inputs の出力と逆伝播用のキャッシュ."""

    fused: np.ndarray  # (N, 3C, Hf, Wf)
    sentence_feature: np.ndarray  # (N, 16, C)
    cue: AttentionCue


class GpgnetModel(Module):
    """フレーム・ターゲット・文の3入力からアテンションマップを出すネットワーク."""

    def __init__(
        self,
        config: RunConfig,
        vocab_size: int,
        rng: np.random.Generator,
        cue: AttentionCue = AttentionCue.JOINT,
    ) -> None:
        self.config = config
        self.frame_shape = config.frame_shape
        self.channels = config.feature_dim
        self.cue = cue
        self.frame_encoder = build_encoder("frame_encoder", config, rng)
        self.target_encoder = build_encoder("target_encoder", config, rng)
        self.language = SentenceEncoder(vocab_size, config.feature_dim, rng)
        self.concat = Concat("fuse")
        self.decoder = build_decoder(config, rng)
        self._cache: FusedInputs | None = None

    def children(self) -> dict[str, Module]:
        return {
            "frame_encoder": self.frame_encoder,
            "target_encoder": self.target_encoder,
            "language": self.language,
            "decoder": self.decoder,
        }

    @property
    def feature_shape(self) -> tuple[int, int]:
        return self.frame_shape[0] // DOWNSAMPLE, self.frame_shape[1] // DOWNSAMPLE

    def _check_image(self, images: np.ndarray, name: str) -> None:
        expected = (3, *self.frame_shape)
        if images.ndim != 4 or images.shape[1:] != expected:
            raise NumericsError(
                "GpgnetModel", "encode_inputs", f"expected {name} (N, {', '.join(map(str, expected))}), got {images.shape}"
            )

    def encode_inputs(
        self,
        frames: np.ndarray,
        targets: np.ndarray,
        token_ids: np.ndarray,
        cue: AttentionCue | None = None,
    ) -> np.ndarray:
        """(N, 3, H, W) ×2 と (N, 16) のID → (N, 3C, H/16, W/16) の融合特徴.

        Args:
        ----
            frames: [-0.5, 0.5] に正規化したフレーム
            targets: 1フレーム目のターゲット領域をフレームと同じ大きさへ引き伸ばしたもの
            token_ids: 文のID列
            cue: この呼び出しだけで使う手がかり（None ならモデルの cue）

        Returns:
        -------
            チャネル順は (フレーム, ターゲット, 文)
        """
        self._check_image(frames, "frames")
        self._check_image(targets, "targets")
        token_ids = np.atleast_2d(token_ids)
        if not len(frames) == len(targets) == len(token_ids):
            raise NumericsError(
                "GpgnetModel", "encode_inputs",
                f"batch sizes differ: {len(frames)}, {len(targets)}, {len(token_ids)}",
            )
        cue = self.cue if cue is None else cue
        frame_map = self.frame_encoder.forward(frames)
        target_map = self.target_encoder.forward(targets)
        if cue == AttentionCue.LANGUAGE_ONLY:
            target_map = np.zeros_like(target_map)
        sentence_feature = self.language.forward(token_ids)
        pooled = anchor_vector(sentence_feature)
        if cue == AttentionCue.TARGET_ONLY:
            pooled = np.zeros_like(pooled)
        hf, wf = frame_map.shape[2:]
        tiled = np.broadcast_to(pooled[:, :, None, None], (*pooled.shape, hf, wf)).copy()
        fused = self.concat.forward([frame_map, target_map, tiled])
        self._cache = FusedInputs(fused=fused, sentence_feature=sentence_feature, cue=cue)
        return fused

    def decode_attention(self, fused: np.ndarray) -> np.ndarray:
        """融合特徴 → (N, H, W) のアテンション（値は [0, 1]）."""
        return self.decoder.forward(fused)[:, 0]

    def forward(
        self,
        frames: np.ndarray,
        targets: np.ndarray,
        token_ids: np.ndarray,
        cue: AttentionCue | None = None,
    ) -> np.ndarray:
        return self.decode_attention(self.encode_inputs(frames, targets, token_ids, cue))

    def backward(self, d_attention: np.ndarray) -> None:
        """アテンションの勾配を全サブネットワークへ流す（勾配は加算）."""
        if self._cache is None:
            raise NumericsError("GpgnetModel", "backward", "backward called before forward")
        d_fused = self.decoder.backward(d_attention[:, None])
        d_frame, d_target, d_tiled = self.concat.backward(d_fused)
        self.frame_encoder.backward(d_frame)
        if self._cache.cue != AttentionCue.LANGUAGE_ONLY:
            self.target_encoder.backward(d_target)
        if self._cache.cue != AttentionCue.TARGET_ONLY:
            d_pooled = d_tiled.sum(axis=(2, 3))
            self.language.backward(anchor_backward(self._cache.sentence_feature, d_pooled))

    def specs(self) -> list[LayerSpec]:
        specs = []
        for prefix, network in (
            ("frame_encoder", self.frame_encoder),
            ("target_encoder", self.target_encoder),
            ("decoder", self.decoder),
        ):
            specs += [spec.model_copy(update={"name": f"{prefix}.{spec.name}"}) for spec in network.specs()]
        for name, layer in self.language.children().items():
            specs.append(layer.spec().model_copy(update={"name": f"language.{name}"}))  # type: ignore[attr-defined]
        return specs
