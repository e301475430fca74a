"""Random scene factory for the training and test splits."""

import numpy as np

from app.tracking_workflow.constants import MAX_DISTRACTORS, PALETTE, SHAPES
from app.tracking_workflow.synthcorpus.scene import (
    STILL_DISPLACEMENT,
    EventKind,
    EventSpec,
    ObjectSpec,
    SceneKind,
    SceneSpec,
)

# 物体サイズの範囲（ピクセル）
MIN_OBJECT_SIZE = 8
MAX_OBJECT_SIZE = 14


def _waypoints(
    rng: np.random.Generator, size: float, height: int, width: int, count: int = 3
) -> list[tuple[float, float]]:
    margin = size / 2.0 + 1.0
    xs = rng.uniform(margin, width - margin, size=count)
    ys = rng.uniform(margin, height - margin, size=count)
    return [(round(float(x), 2), round(float(y), 2)) for x, y in zip(xs, ys, strict=True)]


def _random_object(
    rng: np.random.Generator,
    height: int,
    width: int,
    exclude: set[tuple[str, str]] | None = None,
) -> ObjectSpec:
    colors = sorted(PALETTE)
    while True:
        color = colors[int(rng.integers(len(colors)))]
        shape = SHAPES[int(rng.integers(len(SHAPES)))]
        if not exclude or (color, shape) not in exclude:
            break
    size = float(rng.integers(MIN_OBJECT_SIZE, MAX_OBJECT_SIZE + 1))
    return ObjectSpec(shape=shape, color=color, size=size, waypoints=_waypoints(rng, size, height, width))


def _distractors(
    rng: np.random.Generator, target: ObjectSpec, count: int, height: int, width: int,
    allow_same_kind: bool,
) -> list[ObjectSpec]:
    """ターゲットと区別できる類似物体を作る. allow_same_kind なら同色同形で大きさ違いを混ぜる."""
    result = []
    for _ in range(count):
        if allow_same_kind and rng.random() < 0.3:
            size = target.size - 4 if target.size >= MIN_OBJECT_SIZE + 4 else target.size + 4
            # 複数の同種物体があっても target が最小か最大のままになるようにする
            same = [d.size for d in result if d.color == target.color and d.shape == target.shape]
            if same and (size > target.size) != all(s > target.size for s in same):
                continue
            result.append(ObjectSpec(
                shape=target.shape, color=target.color, size=size,
                waypoints=_waypoints(rng, size, height, width),
            ))
        else:
            result.append(_random_object(rng, height, width, exclude={(target.color, target.shape)}))
    return result


def _pick_offset(rng: np.random.Generator, low: float, high: float) -> float:
    if high <= low:
        return 0.0
    # 小数2桁に丸めても区間内に収まるよう内側へ切り捨てる
    return float(np.clip(np.trunc(rng.uniform(low, high) * 100) / 100, low, high))


def _exit_event(
    rng: np.random.Generator, target: ObjectSpec, n_frames: int, height: int, width: int
) -> EventSpec:
    """フレームの1/3付近で消え、5〜8フレーム後に別の位置で再出現する.

    再出現後の全フレームでターゲットが枠内に収まるオフセットだけを選ぶ。
    """
    start = max(1, n_frames // 3 + int(rng.integers(-2, 3)))
    end = min(n_frames - 1, start + int(rng.integers(5, 9)))
    centers = np.array([target.center_at(t, n_frames) for t in range(end, n_frames)])
    half = target.size / 2.0
    low_x, high_x = half - centers[:, 0].min(), width - half - centers[:, 0].max()
    low_y, high_y = half - centers[:, 1].min(), height - half - centers[:, 1].max()
    dx = _pick_offset(rng, low_x, high_x)
    dy = _pick_offset(rng, low_y, high_y)
    return EventSpec(kind=EventKind.EXIT_VIEW, start=start, end=end, reentry_offset=(dx, dy))


def _short_path(
    rng: np.random.Generator, target: ObjectSpec, height: int, width: int, reach: float = 6.0
) -> list[tuple[float, float]]:
    """消失シーン用の短い軌跡（再出現位置を広く選べるようにする）. 水平方向には必ず動く."""
    x0, y0 = target.waypoints[0]
    margin = target.size / 2.0 + 1.0
    dx = float(rng.uniform(STILL_DISPLACEMENT + 0.5, reach)) * (1.0 if rng.random() < 0.5 else -1.0)
    if not margin <= x0 + dx <= width - margin:
        dx = -dx
    y1 = float(np.clip(y0 + rng.uniform(-reach, reach), margin, height - margin))
    return [(x0, y0), (round(x0 + dx, 2), round(y1, 2))]


def _moving_waypoints(
    rng: np.random.Generator, size: float, height: int, width: int
) -> list[tuple[float, float]]:
    """始点と終点が STILL_DISPLACEMENT 以上離れた軌跡（説明文は常に moving <方向>）."""
    while True:
        waypoints = _waypoints(rng, size, height, width)
        (x0, y0), (x1, y1) = waypoints[0], waypoints[-1]
        if max(abs(x1 - x0), abs(y1 - y0)) >= STILL_DISPLACEMENT:
            return waypoints


def random_scene(
    kind: SceneKind,
    seed: int,
    name: str,
    height: int = 48,
    width: int = 64,
    n_frames: int = 40,
) -> SceneSpec:
    """種別ごとにシードから決定的にシーンを作る."""
    rng = np.random.default_rng(seed)
    target = _random_object(rng, height, width)
    target.waypoints = _moving_waypoints(rng, target.size, height, width)
    distractors: list[ObjectSpec] = []
    events: list[EventSpec] = []
    if kind == SceneKind.DISTRACTOR:
        count = int(rng.integers(1, MAX_DISTRACTORS + 1))
        distractors = _distractors(rng, target, count, height, width, allow_same_kind=True)
    elif kind == SceneKind.OUT_OF_VIEW:
        target.waypoints = _short_path(rng, target, height, width)
        distractors = _distractors(rng, target, 1, height, width, allow_same_kind=False)
        if n_frames >= 10:
            events.append(_exit_event(rng, target, n_frames, height, width))
    elif kind == SceneKind.OCCLUSION and n_frames >= 6:
        start = int(rng.integers(1, n_frames - 4))
        events.append(EventSpec(kind=EventKind.OCCLUDE, start=start, end=start + int(rng.integers(2, 5))))
    elif kind == SceneKind.DEFORM and n_frames >= 6:
        start = int(rng.integers(1, n_frames - 4))
        end = min(n_frames, start + int(rng.integers(4, 10)))
        events.append(EventSpec(kind=EventKind.DEFORM, start=start, end=end))
    spec = SceneSpec(
        name=name, kind=kind, height=height, width=width, n_frames=n_frames,
        target=target, distractors=distractors, events=events, seed=seed,
    )
    return _shrink_deformation(spec)


def _shrink_deformation(spec: SceneSpec) -> SceneSpec:
    """変形で枠外にはみ出すフレームがあれば変形イベントを外す."""
    if all(spec.box_inside(t) or spec.flag(EventKind.EXIT_VIEW, t) for t in range(spec.n_frames)):
        return spec
    events = [e for e in spec.events if e.kind != EventKind.DEFORM]
    return spec.model_copy(update={"events": events})


def training_scenes(
    count: int, seed: int, height: int = 48, width: int = 64, n_frames: int = 40
) -> list[SceneSpec]:
    """学習用: 全シーン種別を順番に割り当てる."""
    kinds = list(SceneKind)
    return [
        random_scene(kinds[i % len(kinds)], seed * 100_003 + i, f"train_{i:04d}", height, width, n_frames)
        for i in range(count)
    ]


def evaluation_scenes(
    count: int, seed: int, height: int = 48, width: int = 64, n_frames: int = 40
) -> list[SceneSpec]:
    """テスト用: 類似物体つきの消失・再出現シーン."""
    return [
        random_scene(SceneKind.OUT_OF_VIEW, seed * 100_003 + 50_000 + i, f"test_{i:04d}", height, width, n_frames)
        for i in range(count)
    ]
