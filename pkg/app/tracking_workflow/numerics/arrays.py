"""Dense array helpers shared by every learned module."""

import numpy as np

from app.core.config import settings
from app.core.exception import NumericsError


def default_dtype() -> np.dtype:
    """学習・テストはfloat64. SINGLE_PRECISION=true でfloat32."""
    return np.dtype(np.float32 if settings.SINGLE_PRECISION else np.float64)


def as_array(values: object, dtype: np.dtype | None = None) -> np.ndarray:
    return np.asarray(values, dtype=dtype or default_dtype())


def assert_finite(array: np.ndarray, subject: str, object: str) -> None:
    if not np.all(np.isfinite(array)):
        raise NumericsError(subject, object, "non-finite values encountered")


def kaiming_uniform(
    shape: tuple[int, ...], fan_in: int, rng: np.random.Generator
) -> np.ndarray:
    """ReLU向けのKaiming一様初期化 (bound = sqrt(6 / fan_in))."""
    bound = np.sqrt(6.0 / max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape).astype(default_dtype())


def stable_sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def softmax_rows(x: np.ndarray) -> np.ndarray:
    """最終軸に沿ったsoftmax（行最大値を引いて安定化）."""
    shifted = x - x.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)
