"""Attention-network training against binary target masks."""

import time
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

import numpy as np
from pydantic import BaseModel, Field

from app.core.exception import CorpusError
from app.core.logging import LogLevel, log
from app.infrastructure.blob_manager import BaseBlobManager
from app.tracking_workflow.config import (
    RunConfig,
    build_run_config,
    dump_run_config,
    parse_run_config_text,
)
from app.tracking_workflow.gpgnet.attention import (
    attention_box_iou,
    prefers_described,
    prepare_frame,
    prepare_target,
    resize_mask,
    save_attention_png,
)
from app.tracking_workflow.gpgnet.masks import to_png_values
from app.tracking_workflow.gpgnet.model import GpgnetModel
from app.tracking_workflow.language import Vocabulary, tokenize
from app.tracking_workflow.numerics import Optimizer, OptimizerKind, load_checkpoint, save_checkpoint
from app.tracking_workflow.salnet.losses import mean_bce_grad, mean_bce_loss
from app.tracking_workflow.synthcorpus.render import SequenceData

GPGNET_CHECKPOINT = "gpgnet.ckpt"
GPGNET_META = "gpgnet.json"
GPGNET_LOG = "gpgnet_training_log.csv"
GPGNET_CONFIG = "gpgnet.cfg"
VOCAB_FILE = "vocab.txt"
PREVIEW_DIR = "attention_preview"


class EpochRecord(BaseModel):
    epoch: int = Field(title="エポック")
    loss: float = Field(title="画素平均BCE（エポック平均）")


@dataclass
class SequenceInputs:
    """1シーケンス分の固定入力（ターゲットパッチと文）."""

    sequence: SequenceData
    target: np.ndarray  # (3, H, W)
    tokens: np.ndarray  # (16,)


@dataclass
class GpgnetTrainingResult:
    model: GpgnetModel
    vocab: Vocabulary
    history: list[EpochRecord] = field(default_factory=list)
    run_dir: Path | None = None


@dataclass
class AttentionReport:
    """学習済みアテンションの評価（検証シーケンス上）."""

    mean_iou: float
    preference_rate: float  # 類似物体のあるフレームで説明対象を上回った割合
    frames: int
    distractor_frames: int


class GpgnetTrainer:
    """(フレーム, 1フレーム目のターゲット, 文, マスク) の組で画素単位BCEを最小化する."""

    def __init__(
        self,
        config: RunConfig,
        blob_manager: BaseBlobManager,
        log_level: LogLevel = LogLevel.INFO,
    ) -> None:
        self.config = config
        self.blob_manager = blob_manager
        self.log = partial(log, log_level=log_level, subject=self.__class__.__name__)
        self.warn = partial(log, log_level=LogLevel.WARNING, subject=self.__class__.__name__)

    def _sequence_inputs(self, sequences: list[SequenceData], vocab: Vocabulary) -> list[SequenceInputs]:
        inputs = []
        for sequence in sequences:
            if sequence.masks is None or sequence.masks.shape != sequence.frames.shape[:3]:
                raise CorpusError(self.__class__.__name__, "train", f"missing masks for {sequence.name}")
            first = sequence.bbox(0)
            if first is None:
                self.warn(object="train", message=f"skip {sequence.name}: target not visible in frame 0")
                continue
            inputs.append(SequenceInputs(
                sequence=sequence,
                target=prepare_target(sequence.frames[0], first, self.config.frame_shape),
                tokens=np.asarray(tokenize(sequence.sentence, vocab)),
            ))
        if not inputs:
            raise CorpusError(self.__class__.__name__, "train", "no usable sequence")
        return inputs

    def _epoch_samples(
        self, inputs: list[SequenceInputs], rng: np.random.Generator
    ) -> list[tuple[int, int]]:
        """(シーケンス番号, フレーム番号) をシーケンスあたり gpgnet_frames_per_sequence 個選んで並べ替える."""
        samples = []
        for k, item in enumerate(inputs):
            n = len(item.sequence)
            count = min(self.config.gpgnet_frames_per_sequence, n)
            samples += [(k, int(t)) for t in rng.choice(n, size=count, replace=False)]
        order = rng.permutation(len(samples))
        return [samples[i] for i in order]

    def _batch(
        self, inputs: list[SequenceInputs], samples: list[tuple[int, int]]
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        shape = self.config.frame_shape
        frames = np.stack([prepare_frame(inputs[k].sequence.frames[t], shape) for k, t in samples])
        targets = np.stack([inputs[k].target for k, _ in samples])
        tokens = np.stack([inputs[k].tokens for k, _ in samples])
        masks = np.stack([resize_mask(inputs[k].sequence.masks[t], shape) for k, t in samples])
        return frames, targets, tokens, masks

    def train(
        self,
        sequences: list[SequenceData],
        vocab: Vocabulary,
        run_dir: str | Path | None = None,
    ) -> GpgnetTrainingResult:
        config = self.config
        inputs = self._sequence_inputs(sequences, vocab)
        self.log(object="hyperparameters", message=(
            f"optimizer=adagrad lr={config.gpgnet_lr} batch={config.gpgnet_batch_size} "
            f"epochs={config.gpgnet_epochs} frames_per_sequence={config.gpgnet_frames_per_sequence} "
            f"input={config.frame_height}x{config.frame_width} C={config.feature_dim} "
            f"cue={config.attention_cue.value} sequences={len(inputs)}"
        ))
        rng = np.random.default_rng(config.seed)
        model = GpgnetModel(config, len(vocab), rng, cue=config.attention_cue)
        optimizer = Optimizer(OptimizerKind.ADAGRAD, config.gpgnet_lr)

        history: list[EpochRecord] = []
        started = time.perf_counter()
        for epoch in range(1, config.gpgnet_epochs + 1):
            samples = self._epoch_samples(inputs, rng)
            losses = []
            for i in range(0, len(samples), config.gpgnet_batch_size):
                frames, targets, tokens, masks = self._batch(inputs, samples[i : i + config.gpgnet_batch_size])
                model.zero_grad()
                attention = model.forward(frames, targets, tokens)
                losses.append(mean_bce_loss(attention, masks))
                model.backward(mean_bce_grad(attention, masks))
                optimizer.step(model.parameters(), model.gradients())
            record = EpochRecord(epoch=epoch, loss=float(np.mean(losses)))
            history.append(record)
            if epoch % config.log_every == 0 or epoch in (1, config.gpgnet_epochs):
                self.log(object="epoch", message=f"{epoch}/{config.gpgnet_epochs} loss={record.loss:.4f}")
        self.log(object="train", message=f"done in {time.perf_counter() - started:.1f}s")

        result = GpgnetTrainingResult(model=model, vocab=vocab, history=history)
        if run_dir is not None:
            result.run_dir = self.save(result, Path(run_dir), inputs[0])
        return result

    def save(self, result: GpgnetTrainingResult, run_dir: Path, preview: SequenceInputs | None = None) -> Path:
        self.blob_manager.mkdir(run_dir)
        save_checkpoint(self.blob_manager, run_dir / GPGNET_CHECKPOINT, result.model, result.model.specs())
        self.blob_manager.save_blob_as_json({"vocab_size": len(result.vocab)}, run_dir / GPGNET_META)
        result.vocab.save(self.blob_manager, run_dir / VOCAB_FILE)
        self.blob_manager.save_blob_as_csv(
            [record.model_dump() for record in result.history], run_dir / GPGNET_LOG, list(EpochRecord.model_fields)
        )
        self.blob_manager.save_blob_as_str(dump_run_config(self.config), run_dir / GPGNET_CONFIG)
        if preview is not None:
            self.export_preview(result.model, preview, run_dir / PREVIEW_DIR)
        self.log(object="save", message=f"checkpoint written to {run_dir}")
        return run_dir

    def export_preview(self, model: GpgnetModel, item: SequenceInputs, directory: Path) -> None:
        """1シーケンス分のアテンションと正解マスクをPNGで書き出す."""
        self.blob_manager.mkdir(directory)
        shape = self.config.frame_shape
        sequence = item.sequence
        for t in range(len(sequence)):
            attention = model.forward(
                prepare_frame(sequence.frames[t], shape)[None], item.target[None], item.tokens[None]
            )[0]
            save_attention_png(self.blob_manager, attention, directory / f"{t:06d}_attention.png")
            self.blob_manager.save_blob_as_image(
                to_png_values(resize_mask(sequence.masks[t], shape)), directory / f"{t:06d}_mask.png"
            )


def predict_attention(
    model: GpgnetModel,
    sequence: SequenceData,
    vocab: Vocabulary,
    frames: list[int] | None = None,
) -> np.ndarray:
    """シーケンスの各フレームのアテンション (T, h, w). ターゲットは常に1フレーム目から切り出す."""
    first = sequence.bbox(0)
    if first is None:
        raise CorpusError("predict_attention", sequence.name, "target not visible in frame 0")
    shape = model.frame_shape
    target = prepare_target(sequence.frames[0], first, shape)
    tokens = np.asarray(tokenize(sequence.sentence, vocab))
    indices = list(range(len(sequence))) if frames is None else frames
    return np.stack([
        model.forward(prepare_frame(sequence.frames[t], shape)[None], target[None], tokens[None])[0]
        for t in indices
    ])


def evaluate_attention(
    model: GpgnetModel, sequences: list[SequenceData], vocab: Vocabulary, tau: float = 0.5
) -> AttentionReport:
    """可視フレームでのボックスIoUと、類似物体との比較を集計する."""
    ious: list[float] = []
    preferences: list[bool] = []
    for sequence in sequences:
        visible = [int(t) for t in sequence.visible_frames()]
        if not visible:
            continue
        attention = predict_attention(model, sequence, vocab, visible)
        height, width = sequence.frame_size
        sy, sx = model.frame_shape[0] / height, model.frame_shape[1] / width
        for map_, t in zip(attention, visible, strict=True):
            truth = sequence.bbox(t)
            assert truth is not None
            scaled = truth.model_copy(update={"x": truth.x * sx, "y": truth.y * sy, "w": truth.w * sx, "h": truth.h * sy})
            ious.append(attention_box_iou(map_, scaled, tau))
            others = [
                box.model_copy(update={"x": box.x * sx, "y": box.y * sy, "w": box.w * sx, "h": box.h * sy})
                for box in sequence.distractor_boxes(t)
            ]
            if others:
                preferences.append(prefers_described(map_, scaled, others))
    return AttentionReport(
        mean_iou=float(np.mean(ious)) if ious else 0.0,
        preference_rate=float(np.mean(preferences)) if preferences else 0.0,
        frames=len(ious),
        distractor_frames=len(preferences),
    )


def load_gpgnet(blob_manager: BaseBlobManager, run_dir: str | Path) -> tuple[GpgnetModel, Vocabulary]:
    """学習済みGPGNetと語彙を読み込む. 構造は gpgnet.cfg から復元する."""
    run_dir = Path(run_dir)
    config = build_run_config(parse_run_config_text(blob_manager.read_blob_as_str(run_dir / GPGNET_CONFIG)))
    meta = blob_manager.read_blob_as_json(run_dir / GPGNET_META)
    assert isinstance(meta, dict)
    vocab = Vocabulary.load(blob_manager, run_dir / VOCAB_FILE)
    model = GpgnetModel(config, int(meta["vocab_size"]), np.random.default_rng(0), cue=config.attention_cue)
    load_checkpoint(blob_manager, run_dir / GPGNET_CHECKPOINT, model)
    return model, vocab
