"""Online tracking loop: initialization, per-frame selection, failure detection and updates."""

import time
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

import cv2
import numpy as np

from app.core.exception import TrackerError
from app.core.logging import LogLevel, log
from app.domain.enums import Provenance, UpdateMode
from app.domain.models import BBox
from app.infrastructure.blob_manager import BaseBlobManager
from app.tracking_workflow.config import RunConfig
from app.tracking_workflow.constants import FAILURE_THRESHOLD
from app.tracking_workflow.geometry import clip_to_frame, from_bbox, to_bbox
from app.tracking_workflow.gpgnet import GpgnetModel, prepare_frame, prepare_target, to_png_values
from app.tracking_workflow.language import Vocabulary
from app.tracking_workflow.proposals import (
    attention_to_frame,
    draw_labeled_samples,
    gaussian_sample,
    global_proposals,
    merge_candidate_pools,
)
from app.tracking_workflow.salnet import SalnetModel
from app.tracking_workflow.synthcorpus import SequenceData
from app.tracking_workflow.tracker.memory import FrameMemory, MemoryEntry
from app.tracking_workflow.tracker.online import OnlineClassifier
from app.tracking_workflow.tracker.state import (
    TRACK_CSV_FIELDS,
    FrameRecord,
    TrackState,
    TrackSummary,
)

OVERLAY_DIR = "overlay"


def detect_failure(score: float, threshold: float = FAILURE_THRESHOLD) -> bool:
    """F+ が閾値未満なら失敗（閾値ちょうどは成功）."""
    return score < threshold


def _collect(state: TrackState, frame: np.ndarray, n_pos: int, n_neg: int) -> MemoryEntry:
    pos, neg = draw_labeled_samples(state.box, n_pos, n_neg, state.rng, state.frame_size)
    classifier = state.classifier
    return MemoryEntry(
        frame=state.t,
        positives=classifier.conv_features(frame, pos),
        negatives=classifier.conv_features(frame, neg),
    )


def init_tracker(
    frame: np.ndarray,
    bbox: BBox,
    sentence: str,
    salnet: SalnetModel,
    vocab: Vocabulary,
    config: RunConfig,
    rng: np.random.Generator,
    attention_model: GpgnetModel | None = None,
) -> TrackState:
    """1フレーム目の正例・負例で新しいヘッドと fc 層を学習し、メモリを初期化する.

    Args:
    ----
        frame: 1フレーム目 (H, W, 3) uint8
        bbox: 与えられたターゲットのボックス
        sentence: ターゲットの説明文
        salnet: 学習済みSALNet（共有層だけを使う）
        vocab: 文のトークン化に使う語彙
        config: 設定
        rng: 追跡全体で使う乱数
        attention_model: 大域候補用のGPGNet（None なら局所候補のみ）

    Returns:
    -------
        初期化済みの状態
    """
    if not bbox.is_valid():
        raise TrackerError("init_tracker", "bbox", f"degenerate initial box {bbox.to_xywh()}")
    frame_size = (int(frame.shape[0]), int(frame.shape[1]))
    if not bbox.intersects(frame_size[1], frame_size[0]):
        raise TrackerError("init_tracker", "bbox", "initial box lies outside the frame")

    classifier = OnlineClassifier(salnet, config, rng)
    encoder = attention_model.language if attention_model is not None else salnet.language
    state = TrackState(
        config=config,
        classifier=classifier,
        box=from_bbox(bbox),
        frame_size=frame_size,
        long_memory=FrameMemory(config.long_memory),
        short_memory=FrameMemory(config.short_memory),
        sentence=encoder.sentence_spec(sentence, vocab),
        rng=rng,
        attention_model=attention_model,
        attention_cue=config.attention_cue,
    )
    if attention_model is not None and not config.local_only:
        state.target_patch = prepare_target(frame, bbox, attention_model.frame_shape)

    entry = _collect(state, frame, config.n_init_pos, config.n_init_neg)
    classifier.fine_tune(entry.positives, entry.negatives, config.init_steps, rng)
    keep = rng.choice(len(entry.negatives), size=min(config.n_update_neg, len(entry.negatives)), replace=False)
    seeded = MemoryEntry(frame=0, positives=entry.positives, negatives=entry.negatives[np.sort(keep)])
    state.long_memory.push(seeded)
    state.short_memory.push(seeded)
    state.records.append(FrameRecord(
        frame=0, x=bbox.x, y=bbox.y, w=bbox.w, h=bbox.h, score=1.0, provenance=Provenance.INITIAL,
    ))
    return state


def update_model(state: TrackState, mode: UpdateMode) -> TrackState:
    """長期更新は長期メモリの正例と短期メモリの負例、短期更新は短期メモリだけを使う."""
    config = state.config
    positive_memory = state.long_memory if mode == UpdateMode.LONG else state.short_memory
    if len(positive_memory) == 0 or len(state.short_memory) == 0:
        log(LogLevel.WARNING, "update_model", mode.value, "empty memory, update skipped")
        return state
    state.classifier.fine_tune(
        positive_memory.positives(), state.short_memory.negatives(), config.update_steps, state.rng
    )
    if mode == UpdateMode.LONG:
        state.long_updates += 1
    else:
        state.short_updates += 1
    return state


def _attention(state: TrackState, frame: np.ndarray) -> np.ndarray | None:
    model = state.attention_model
    if model is None or state.target_patch is None or state.config.local_only:
        return None
    if state.attention is None or (state.t - 1) % state.config.attention_stride == 0:
        state.attention = model.forward(
            prepare_frame(frame, model.frame_shape)[None],
            state.target_patch[None],
            np.asarray(state.sentence.tokens)[None],
            cue=state.attention_cue,
        )[0]
    return state.attention


def track_step(state: TrackState, frame: np.ndarray) -> FrameRecord:
    """1フレーム進める. 候補プールの F+ 最大の候補を選び、成功時だけメモリを更新する."""
    config = state.config
    state.t += 1
    rng = state.rng
    local = gaussian_sample(state.box, config.n_local, rng, config.sigma_xy, config.sigma_scale, state.frame_size)
    attention = _attention(state, frame)
    if attention is not None:
        global_ = global_proposals(
            attention, (float(state.box[2]), float(state.box[3])), rng, state.frame_size,
            tau=config.attention_threshold, min_area=config.min_region_area,
            n_per_region=config.n_per_region, sigma_xy=config.sigma_xy, sigma_scale=config.sigma_scale,
        )
    else:
        global_ = np.zeros((0, 4))
    pool = merge_candidate_pools(local, global_, config.pool_size, config.max_global)
    scores = state.classifier.score(frame, pool.boxes)
    if config.dump_candidates:
        state.candidates.extend(pool.debug_records(state.t, scores))
    best = int(np.argmax(scores))
    score = float(scores[best])
    state.scores.append(score)

    success = not detect_failure(score)
    update = UpdateMode.NONE
    if success:
        state.box = clip_to_frame(pool.boxes[best], state.frame_size)[0]
        entry = _collect(state, frame, config.n_update_pos, config.n_update_neg)
        state.long_memory.push(entry)
        state.short_memory.push(entry)
        if state.t % config.long_interval == 0:
            update = UpdateMode.LONG
    else:
        update = UpdateMode.SHORT
    if update != UpdateMode.NONE:
        update_model(state, update)

    box = to_bbox(state.box)
    record = FrameRecord(
        frame=state.t, x=box.x, y=box.y, w=box.w, h=box.h, score=score,
        provenance=pool.provenance[best], success=success, update=update,
    )
    state.records.append(record)
    log(LogLevel.DEBUG, "track_step", f"frame {state.t}", (
        f"score={score:.3f} provenance={record.provenance.value} pool={len(pool)} "
        f"global={pool.count(Provenance.GLOBAL)} update={update.value}"
    ))
    return record


def render_overlay(frame: np.ndarray, record: FrameRecord, attention: np.ndarray | None) -> np.ndarray:
    """ボックスとアテンションのヒートマップを重ねたRGB画像."""
    image = frame.copy()
    if attention is not None:
        heat = to_png_values(attention_to_frame(attention, frame.shape[:2]))
        colored = cv2.cvtColor(cv2.applyColorMap(heat, cv2.COLORMAP_JET), cv2.COLOR_BGR2RGB)
        image = cv2.addWeighted(image, 0.6, colored, 0.4, 0.0)
    color = (0, 255, 0) if record.success else (255, 0, 0)
    top_left = (round(record.x), round(record.y))
    bottom_right = (round(record.x + record.w) - 1, round(record.y + record.h) - 1)
    cv2.rectangle(image, top_left, bottom_right, color, thickness=1)
    return image


@dataclass
class TrackResult:
    sequence: str
    records: list[FrameRecord]
    summary: TrackSummary
    overlays: list[np.ndarray] = field(default_factory=list)
    candidates: list[dict] = field(default_factory=list)


class LanguageTracker:
    """シーケンス単位で init_tracker と track_step を回し、結果を書き出す."""

    def __init__(
        self,
        config: RunConfig,
        salnet: SalnetModel,
        vocab: Vocabulary,
        blob_manager: BaseBlobManager,
        attention_model: GpgnetModel | None = None,
        log_level: LogLevel = LogLevel.INFO,
    ) -> None:
        self.config = config
        self.salnet = salnet
        self.vocab = vocab
        self.blob_manager = blob_manager
        self.attention_model = None if config.local_only else attention_model
        self.log = partial(log, log_level=log_level, subject=self.__class__.__name__)

    def run(self, sequence: SequenceData, overlay: bool = False) -> TrackResult:
        first = sequence.bbox(0)
        if first is None:
            raise TrackerError(self.__class__.__name__, sequence.name, "target not visible in frame 0")
        started = time.perf_counter()
        rng = np.random.default_rng(self.config.seed)
        state = init_tracker(
            sequence.frames[0], first, sequence.sentence, self.salnet, self.vocab, self.config, rng,
            attention_model=self.attention_model,
        )
        overlays = [render_overlay(sequence.frames[0], state.records[0], None)] if overlay else []
        for t in range(1, len(sequence)):
            record = track_step(state, sequence.frames[t])
            if overlay:
                overlays.append(render_overlay(sequence.frames[t], record, state.attention))
        seconds = time.perf_counter() - started
        records = state.records
        summary = TrackSummary(
            sequence=sequence.name,
            frames=len(records),
            failures=sum(1 for r in records if not r.success),
            long_updates=state.long_updates,
            short_updates=state.short_updates,
            global_wins=sum(1 for r in records if r.provenance == Provenance.GLOBAL),
            seconds=round(seconds, 3),
            fps=round(len(records) / seconds, 3) if seconds > 0 else 0.0,
        )
        self.log(object=sequence.name, message=(
            f"frames={summary.frames} failures={summary.failures} long={summary.long_updates} "
            f"short={summary.short_updates} global_wins={summary.global_wins} fps={summary.fps}"
        ))
        return TrackResult(
            sequence=sequence.name, records=records, summary=summary, overlays=overlays, candidates=state.candidates,
        )

    def save(self, result: TrackResult, out_dir: str | Path) -> Path:
        """<out_dir>/<sequence>.csv と要約JSON、オーバーレイPNGを書き出す."""
        out_dir = Path(out_dir)
        self.blob_manager.mkdir(out_dir)
        path = out_dir / f"{result.sequence}.csv"
        self.blob_manager.save_blob_as_csv([r.csv_row() for r in result.records], path, TRACK_CSV_FIELDS)
        self.blob_manager.save_blob_as_json(result.summary.model_dump(), out_dir / f"{result.sequence}_summary.json")
        if result.candidates:
            self.blob_manager.save_blob_as_jsonl(result.candidates, out_dir / f"{result.sequence}_candidates.jsonl")
        if result.overlays:
            overlay_dir = out_dir / OVERLAY_DIR / result.sequence
            self.blob_manager.mkdir(overlay_dir)
            for t, image in enumerate(result.overlays):
                self.blob_manager.save_blob_as_image(image, overlay_dir / f"{t:06d}.png")
        return path


def read_track_csv(blob_manager: BaseBlobManager, path: str | Path) -> list[FrameRecord]:
    return [
        FrameRecord(
            frame=int(row["frame"]), x=float(row["x"]), y=float(row["y"]), w=float(row["w"]),
            h=float(row["h"]), score=float(row["score"]), provenance=Provenance(row["provenance"]),
        )
        for row in blob_manager.read_blob_as_csv(path)
    ]
