"""Tracking state and per-frame records."""

from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, Field

from app.domain.enums import AttentionCue, Provenance, UpdateMode
from app.tracking_workflow.config import RunConfig
from app.tracking_workflow.gpgnet import GpgnetModel
from app.tracking_workflow.language import SentenceSpec
from app.tracking_workflow.tracker.memory import FrameMemory
from app.tracking_workflow.tracker.online import OnlineClassifier

TRACK_CSV_FIELDS = ["frame", "x", "y", "w", "h", "score", "provenance"]


class FrameRecord(BaseModel):
    """1フレーム分の追跡結果（ボックスは左上形式）."""

    frame: int = Field(title="フレーム番号")
    x: float = Field(title="左端x")
    y: float = Field(title="上端y")
    w: float = Field(title="幅")
    h: float = Field(title="高さ")
    score: float = Field(title="選ばれた候補の F+")
    provenance: Provenance = Field(title="選ばれた候補の出どころ")
    success: bool = Field(default=True, title="F+ >= 0.5")
    update: UpdateMode = Field(default=UpdateMode.NONE, title="このフレームで行った更新")

    def csv_row(self) -> dict[str, object]:
        return {
            "frame": self.frame,
            "x": f"{self.x:.4f}",
            "y": f"{self.y:.4f}",
            "w": f"{self.w:.4f}",
            "h": f"{self.h:.4f}",
            "score": f"{self.score:.6f}",
            "provenance": self.provenance.value,
        }


class TrackSummary(BaseModel):
    sequence: str = Field(title="シーケンス名")
    frames: int = Field(title="処理フレーム数（1フレーム目を含む）")
    failures: int = Field(title="失敗フレーム数")
    long_updates: int = Field(title="長期更新の回数")
    short_updates: int = Field(title="短期更新の回数")
    global_wins: int = Field(title="大域候補が選ばれたフレーム数")
    seconds: float = Field(title="処理時間（秒）")
    fps: float = Field(title="処理速度（報告のみ）")


@dataclass
class TrackState:
    """1シーケンスの追跡中の状態. 書き換えは track_step と update_model だけが行う."""

    config: RunConfig
    classifier: OnlineClassifier
    box: np.ndarray  # 現在のボックス（中心形式）
    frame_size: tuple[int, int]
    long_memory: FrameMemory
    short_memory: FrameMemory
    sentence: SentenceSpec
    rng: np.random.Generator
    t: int = 0
    attention_model: GpgnetModel | None = None
    target_patch: np.ndarray | None = None  # 1フレーム目のターゲット（GPGNet入力）
    attention_cue: AttentionCue = AttentionCue.JOINT
    attention: np.ndarray | None = None
    scores: list[float] = field(default_factory=list)
    records: list[FrameRecord] = field(default_factory=list)
    candidates: list[dict] = field(default_factory=list)  # dump_candidates 有効時の候補記録
    long_updates: int = 0
    short_updates: int = 0
