"""Scene specification for procedurally generated sequences."""

import numpy as np
from pydantic import BaseModel, Field, model_validator

from app.domain.enums import BaseEnum
from app.tracking_workflow.constants import MAX_DISTRACTORS, PALETTE, SHAPES

# 移動量がこれ未満なら「静止」とみなす（ピクセル）
STILL_DISPLACEMENT = 2.0


class EventKind(BaseEnum):
    OCCLUDE = "occlude"  # 遮蔽物で隠れる（BBoxは評価用に保持）
    EXIT_VIEW = "exit_view"  # フレーム外に出る（BBoxなし）
    DEFORM = "deform"  # 縦横比が変化する


class SceneKind(BaseEnum):
    PLAIN = "plain"
    OCCLUSION = "occlusion"
    OUT_OF_VIEW = "out_of_view"
    DISTRACTOR = "distractor"
    DEFORM = "deform"


class ObjectSpec(BaseModel):
    """描画する物体1つ分の設定."""

    shape: str = Field(title="形状")
    color: str = Field(title="色")
    size: float = Field(title="一辺（直径）のピクセル数")
    waypoints: list[tuple[float, float]] = Field(
        title="軌跡の経由点 (x, y)",
        description="フレーム全体に等間隔で配置し、線形補間で中心位置を決める",
    )

    @model_validator(mode="after")
    def _validate(self) -> "ObjectSpec":
        if self.shape not in SHAPES:
            raise ValueError(f"unknown shape {self.shape!r}")
        if self.color not in PALETTE:
            raise ValueError(f"unknown color {self.color!r}")
        if self.size <= 0:
            raise ValueError(f"size must be > 0 (got {self.size})")
        if not self.waypoints:
            raise ValueError("at least one waypoint is required")
        return self

    def center_at(self, t: int, n_frames: int) -> tuple[float, float]:
        points = np.asarray(self.waypoints, dtype=np.float64)
        if len(points) == 1:
            return float(points[0, 0]), float(points[0, 1])
        knots = np.linspace(0.0, max(n_frames - 1, 1), len(points))
        return float(np.interp(t, knots, points[:, 0])), float(np.interp(t, knots, points[:, 1]))

    def displacement(self) -> tuple[float, float]:
        first, last = self.waypoints[0], self.waypoints[-1]
        return last[0] - first[0], last[1] - first[1]


class EventSpec(BaseModel):
    kind: EventKind = Field(title="イベント種別")
    start: int = Field(title="開始フレーム（含む）")
    end: int = Field(title="終了フレーム（含まない）")
    reentry_offset: tuple[float, float] = Field(
        default=(0.0, 0.0), title="再出現時の位置ずれ (dx, dy)"
    )

    def active(self, t: int) -> bool:
        return self.start <= t < self.end


class SceneSpec(BaseModel):
    """1シーケンス分の合成シーン."""

    name: str = Field(title="シーケンス名")
    kind: SceneKind = Field(default=SceneKind.PLAIN, title="シーン種別")
    height: int = Field(default=48, title="フレームの高さ")
    width: int = Field(default=64, title="フレームの幅")
    n_frames: int = Field(default=40, title="フレーム数")
    target: ObjectSpec = Field(title="ターゲット")
    distractors: list[ObjectSpec] = Field(default_factory=list, title="類似物体")
    events: list[EventSpec] = Field(default_factory=list, title="イベント")
    seed: int = Field(default=0, title="背景テクスチャの乱数シード")

    @model_validator(mode="after")
    def _validate(self) -> "SceneSpec":
        if self.n_frames < 1:
            raise ValueError(f"n_frames must be >= 1 (got {self.n_frames})")
        if len(self.distractors) > MAX_DISTRACTORS:
            raise ValueError(f"at most {MAX_DISTRACTORS} distractors (got {len(self.distractors)})")
        if not self.box_inside(0):
            raise ValueError("target must start inside the frame")
        for event in self.events:
            if not 0 <= event.start < event.end <= self.n_frames:
                raise ValueError(f"event {event.kind.value} outside [0, {self.n_frames})")
            if event.kind == EventKind.EXIT_VIEW and event.end < self.n_frames:
                if not self.box_inside(event.end):
                    raise ValueError("reentry offset must keep the target inside the frame")
        size_qualifier(self)
        return self

    def target_offset(self, t: int) -> tuple[float, float]:
        """再出現後の累積オフセット."""
        dx = dy = 0.0
        for event in self.events:
            if event.kind == EventKind.EXIT_VIEW and t >= event.end:
                dx += event.reentry_offset[0]
                dy += event.reentry_offset[1]
        return dx, dy

    def target_center(self, t: int) -> tuple[float, float]:
        cx, cy = self.target.center_at(t, self.n_frames)
        dx, dy = self.target_offset(t)
        return cx + dx, cy + dy

    def target_extent(self, t: int) -> tuple[float, float]:
        """変形イベント中は縦横比を正弦的に変える."""
        w = h = self.target.size
        for event in self.events:
            if event.kind == EventKind.DEFORM and event.active(t):
                phase = np.sin(np.pi * (t - event.start + 1) / (event.end - event.start + 1))
                w = self.target.size * (1.0 + 0.5 * phase)
                h = self.target.size * (1.0 - 0.3 * phase)
        return float(w), float(h)

    def box_inside(self, t: int) -> bool:
        cx, cy = self.target_center(t)
        w, h = self.target_extent(t)
        return (
            cx - w / 2.0 >= 0 and cy - h / 2.0 >= 0
            and cx + w / 2.0 <= self.width and cy + h / 2.0 <= self.height
        )

    def flag(self, kind: EventKind, t: int) -> bool:
        return any(event.kind == kind and event.active(t) for event in self.events)


def size_qualifier(spec: SceneSpec) -> str | None:
    """同じ色・形の類似物体があるときの大きさの修飾語. 区別できなければ ValueError."""
    same = [d for d in spec.distractors if d.color == spec.target.color and d.shape == spec.target.shape]
    if not same:
        return None
    sizes = [d.size for d in same]
    if all(spec.target.size < s for s in sizes):
        return "small"
    if all(spec.target.size > s for s in sizes):
        return "large"
    raise ValueError("target is indistinguishable from a distractor")


def motion_direction(spec: SceneSpec) -> str:
    dx, dy = spec.target.displacement()
    if max(abs(dx), abs(dy)) < STILL_DISPLACEMENT:
        return "standing still"
    if abs(dx) >= abs(dy):
        return "moving right" if dx > 0 else "moving left"
    return "moving down" if dy > 0 else "moving up"


def describe_target(spec: SceneSpec) -> str:
    """ "the [small|large] <color> <shape> moving <direction>" 形式の説明文."""
    words = ["the"]
    qualifier = size_qualifier(spec)
    if qualifier:
        words.append(qualifier)
    words += [spec.target.color, spec.target.shape, motion_direction(spec)]
    return " ".join(words)


def template_words() -> list[str]:
    """説明文テンプレートに現れうる全単語."""
    words = {"the", "small", "large", "moving", "standing", "still", "right", "left", "up", "down"}
    words.update(PALETTE)
    words.update(SHAPES)
    return sorted(words)
