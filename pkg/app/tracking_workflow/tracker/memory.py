"""Fixed-capacity FIFO memories of per-frame sample features."""

from collections import deque
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MemoryEntry:
    frame: int
    positives: np.ndarray  # (n_pos, F) 凍結畳み込み層の出力
    negatives: np.ndarray  # (n_neg, F)


class FrameMemory:
    """成功フレームのサンプル特徴を最新 capacity フレーム分だけ保持する."""

    def __init__(self, capacity: int) -> None:
        self.capacity = capacity
        self._entries: deque[MemoryEntry] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._entries)

    def push(self, entry: MemoryEntry) -> None:
        self._entries.append(entry)

    def frames(self) -> list[int]:
        return [entry.frame for entry in self._entries]

    def positives(self) -> np.ndarray:
        return np.concatenate([entry.positives for entry in self._entries])

    def negatives(self) -> np.ndarray:
        return np.concatenate([entry.negatives for entry in self._entries])
