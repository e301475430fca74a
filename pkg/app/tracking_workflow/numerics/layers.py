"""Fixed layer vocabulary with explicit forward / backward passes.

Layout conventions:
    conv2d / upsample-conv2d: (N, C, H, W)
    conv1d:                   (N, C, L)
    fully-connected:          (N, in_features), weight (out, in), y = x W^T + b
    embedding:                integer ids (N, L) -> (N, L, D)
"""

from abc import abstractmethod
from collections.abc import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from pydantic import BaseModel, Field

from app.core.exception import NumericsError
from app.domain.enums import BaseEnum
from app.tracking_workflow.constants import PAD_ID
from app.tracking_workflow.numerics.arrays import (
    default_dtype,
    kaiming_uniform,
    softmax_rows,
    stable_sigmoid,
)
from app.tracking_workflow.numerics.module import Module


class LayerKind(BaseEnum):
    CONV2D = "conv2d"
    CONV1D = "conv1d"
    FULLY_CONNECTED = "fully-connected"
    RELU = "relu"
    SIGMOID = "sigmoid"
    SOFTMAX_ROWS = "softmax-rows"
    DROPOUT = "dropout"
    CONCAT = "concat"
    UPSAMPLE_CONV2D = "upsample-conv2d"
    FLATTEN = "flatten"
    EMBEDDING = "embedding"


class LayerSpec(BaseModel):
    """層の種類とパラメータ形状の記述（チェックポイントのマニフェストに出力）."""

    name: str = Field(title="層名")
    kind: LayerKind = Field(title="層の種類")
    param_shapes: dict[str, list[int]] = Field(default_factory=dict, title="パラメータ形状")
    stride: int | None = Field(default=None, title="ストライド")
    padding: tuple[int, int] | None = Field(default=None, title="パディング (h, w)")
    options: dict[str, float] = Field(default_factory=dict, title="その他の設定")

    def to_manifest_line(self) -> str:
        parts = [self.name, self.kind.value]
        parts += [f"{k}={'x'.join(str(d) for d in v)}" for k, v in self.param_shapes.items()]
        if self.stride is not None:
            parts.append(f"stride={self.stride}")
        if self.padding is not None:
            parts.append(f"padding={self.padding[0]}x{self.padding[1]}")
        parts += [f"{k}={v:g}" for k, v in self.options.items()]
        return " ".join(parts)


class Layer(Module):
    """全ての層の基底クラス. backward は勾配を `grads` に加算する."""

    kind: LayerKind

    def __init__(self, name: str) -> None:
        self.name = name
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self._cache: object | None = None

    def own_parameters(self) -> dict[str, np.ndarray]:
        return self.params

    def own_gradients(self) -> dict[str, np.ndarray]:
        return self.grads

    def _init_grads(self) -> None:
        self.grads = {key: np.zeros_like(value) for key, value in self.params.items()}

    def _require_cache(self) -> object:
        if self._cache is None:
            raise NumericsError(self.name, "backward", "backward called before forward")
        return self._cache

    def _fail(self, message: str) -> NumericsError:
        return NumericsError(self.name, f"{self.kind.value}.forward", message)

    @abstractmethod
    def forward(
        self, x: np.ndarray, *, training: bool = False, rng: np.random.Generator | None = None
    ) -> np.ndarray:
        raise NotImplementedError

    @abstractmethod
    def backward(self, dout: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def spec(self) -> LayerSpec:
        return LayerSpec(
            name=self.name,
            kind=self.kind,
            param_shapes={k: list(v.shape) for k, v in self.params.items()},
        )


# ---------------------------------------------------------------------------
# 畳み込みの共通処理
# ---------------------------------------------------------------------------


def _resolve_padding(padding: int | str, kh: int, kw: int) -> tuple[int, int]:
    if padding == "same":
        return ((kh - 1) // 2, (kw - 1) // 2)
    if isinstance(padding, int):
        return (padding, padding)
    raise NumericsError("conv", "padding", f"unsupported padding {padding!r}")


def conv2d_forward(
    x: np.ndarray, weight: np.ndarray, bias: np.ndarray, stride: int, pad: tuple[int, int]
) -> tuple[np.ndarray, tuple[int, ...], np.ndarray]:
    """im2col（sliding_window_view）による畳み込み.

    Returns:
    -------
        出力 (N, O, Ho, Wo)、パディング後の入力形状、ウィンドウビュー
    """
    kh, kw = weight.shape[2:]
    ph, pw = pad
    xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    out = np.einsum("nchwij,ocij->nohw", windows, weight, optimize=True)
    out += bias[None, :, None, None]
    return out, xp.shape, windows


def conv2d_backward(
    dout: np.ndarray,
    weight: np.ndarray,
    padded_shape: tuple[int, ...],
    windows: np.ndarray,
    stride: int,
    pad: tuple[int, int],
    need_param_grads: bool = True,
) -> tuple[np.ndarray, np.ndarray | None, np.ndarray | None]:
    kh, kw = weight.shape[2:]
    ph, pw = pad
    d_weight = d_bias = None
    if need_param_grads:
        d_weight = np.einsum("nchwij,nohw->ocij", windows, dout, optimize=True)
        d_bias = dout.sum(axis=(0, 2, 3))
    d_windows = np.einsum("nohw,ocij->nchwij", dout, weight, optimize=True)
    d_padded = np.zeros(padded_shape, dtype=dout.dtype)
    ho, wo = dout.shape[2:]
    for i in range(kh):
        for j in range(kw):
            d_padded[:, :, i : i + stride * ho : stride, j : j + stride * wo : stride] += (
                d_windows[:, :, :, :, i, j]
            )
    dx = d_padded[:, :, ph : padded_shape[2] - ph, pw : padded_shape[3] - pw]
    return dx, d_weight, d_bias


class Conv2d(Layer):
    kind = LayerKind.CONV2D

    def __init__(
        self,
        name: str,
        in_channels: int,
        out_channels: int,
        kernel_size: int | tuple[int, int],
        rng: np.random.Generator,
        stride: int = 1,
        padding: int | str = "same",
    ) -> None:
        super().__init__(name)
        kh, kw = (kernel_size, kernel_size) if isinstance(kernel_size, int) else kernel_size
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.stride = stride
        self.pad = _resolve_padding(padding, kh, kw)
        fan_in = in_channels * kh * kw
        self.params = {
            "W": kaiming_uniform((out_channels, in_channels, kh, kw), fan_in, rng),
            "b": np.zeros(out_channels, dtype=default_dtype()),
        }
        self._init_grads()

    def forward(
        self, x: np.ndarray, *, training: bool = False, rng: np.random.Generator | None = None
    ) -> np.ndarray:
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise self._fail(f"expected (N, {self.in_channels}, H, W), got {x.shape}")
        out, padded_shape, windows = conv2d_forward(
            x, self.params["W"], self.params["b"], self.stride, self.pad
        )
        self._cache = (padded_shape, windows)
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        padded_shape, windows = self._require_cache()  # type: ignore[misc]
        dx, d_weight, d_bias = conv2d_backward(
            dout, self.params["W"], padded_shape, windows, self.stride, self.pad,
            need_param_grads=self.trainable,
        )
        if d_weight is not None and d_bias is not None:
            self.grads["W"] += d_weight
            self.grads["b"] += d_bias
        return dx

    def spec(self) -> LayerSpec:
        spec = super().spec()
        spec.stride = self.stride
        spec.padding = self.pad
        return spec


class Conv1d(Layer):
    """トークン軸に沿った1次元畳み込み. 内部では高さ1の2次元畳み込みとして計算する."""

    kind = LayerKind.CONV1D

    def __init__(
        self,
        name: str,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        rng: np.random.Generator,
        padding: int | str = "same",
    ) -> None:
        super().__init__(name)
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.pad = (0, _resolve_padding(padding, 1, kernel_size)[1])
        self.params = {
            "W": kaiming_uniform(
                (out_channels, in_channels, kernel_size), in_channels * kernel_size, rng
            ),
            "b": np.zeros(out_channels, dtype=default_dtype()),
        }
        self._init_grads()

    def forward(
        self, x: np.ndarray, *, training: bool = False, rng: np.random.Generator | None = None
    ) -> np.ndarray:
        if x.ndim != 3 or x.shape[1] != self.in_channels:
            raise self._fail(f"expected (N, {self.in_channels}, L), got {x.shape}")
        out, padded_shape, windows = conv2d_forward(
            x[:, :, None, :], self.params["W"][:, :, None, :], self.params["b"], 1, self.pad
        )
        self._cache = (padded_shape, windows)
        return out[:, :, 0, :]

    def backward(self, dout: np.ndarray) -> np.ndarray:
        padded_shape, windows = self._require_cache()  # type: ignore[misc]
        dx, d_weight, d_bias = conv2d_backward(
            dout[:, :, None, :], self.params["W"][:, :, None, :], padded_shape, windows, 1,
            self.pad, need_param_grads=self.trainable,
        )
        if d_weight is not None and d_bias is not None:
            self.grads["W"] += d_weight[:, :, 0, :]
            self.grads["b"] += d_bias
        return dx[:, :, 0, :]

    def spec(self) -> LayerSpec:
        spec = super().spec()
        spec.stride = 1
        spec.padding = self.pad
        return spec


class UpsampleConv2d(Layer):
    """最近傍アップサンプリング + same畳み込み（デコーダ用）."""

    kind = LayerKind.UPSAMPLE_CONV2D

    def __init__(
        self,
        name: str,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        rng: np.random.Generator,
        scale: int = 2,
    ) -> None:
        super().__init__(name)
        self.in_channels = in_channels
        self.scale = scale
        self.pad = _resolve_padding("same", kernel_size, kernel_size)
        fan_in = in_channels * kernel_size * kernel_size
        self.params = {
            "W": kaiming_uniform(
                (out_channels, in_channels, kernel_size, kernel_size), fan_in, rng
            ),
            "b": np.zeros(out_channels, dtype=default_dtype()),
        }
        self._init_grads()

    def forward(
        self, x: np.ndarray, *, training: bool = False, rng: np.random.Generator | None = None
    ) -> np.ndarray:
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise self._fail(f"expected (N, {self.in_channels}, H, W), got {x.shape}")
        upsampled = x.repeat(self.scale, axis=2).repeat(self.scale, axis=3)
        out, padded_shape, windows = conv2d_forward(
            upsampled, self.params["W"], self.params["b"], 1, self.pad
        )
        self._cache = (x.shape, padded_shape, windows)
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        in_shape, padded_shape, windows = self._require_cache()  # type: ignore[misc]
        d_up, d_weight, d_bias = conv2d_backward(
            dout, self.params["W"], padded_shape, windows, 1, self.pad,
            need_param_grads=self.trainable,
        )
        if d_weight is not None and d_bias is not None:
            self.grads["W"] += d_weight
            self.grads["b"] += d_bias
        n, c, h, w = in_shape
        s = self.scale
        return d_up.reshape(n, c, h, s, w, s).sum(axis=(3, 5))

    def spec(self) -> LayerSpec:
        spec = super().spec()
        spec.stride = 1
        spec.padding = self.pad
        spec.options = {"scale": float(self.scale)}
        return spec


class Linear(Layer):
    kind = LayerKind.FULLY_CONNECTED

    def __init__(
        self, name: str, in_features: int, out_features: int, rng: np.random.Generator
    ) -> None:
        super().__init__(name)
        self.in_features = in_features
        self.params = {
            "W": kaiming_uniform((out_features, in_features), in_features, rng),
            "b": np.zeros(out_features, dtype=default_dtype()),
        }
        self._init_grads()

    def forward(
        self, x: np.ndarray, *, training: bool = False, rng: np.random.Generator | None = None
    ) -> np.ndarray:
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise self._fail(f"expected (N, {self.in_features}), got {x.shape}")
        self._cache = x
        return x @ self.params["W"].T + self.params["b"]

    def backward(self, dout: np.ndarray) -> np.ndarray:
        x = self._require_cache()
        if self.trainable:
            self.grads["W"] += dout.T @ x  # type: ignore[operator]
            self.grads["b"] += dout.sum(axis=0)
        return dout @ self.params["W"]


class Embedding(Layer):
    """単語ID → ベクトルの表引き. パディング行は常にゼロ."""

    kind = LayerKind.EMBEDDING

    def __init__(
        self, name: str, vocab_size: int, dim: int, rng: np.random.Generator
    ) -> None:
        super().__init__(name)
        table = rng.normal(0.0, 1.0, size=(vocab_size, dim)).astype(default_dtype())
        table[PAD_ID] = 0.0
        self.params = {"W": table}
        self._init_grads()

    def forward(
        self, x: np.ndarray, *, training: bool = False, rng: np.random.Generator | None = None
    ) -> np.ndarray:
        ids = np.asarray(x, dtype=np.int64)
        vocab_size = self.params["W"].shape[0]
        if ids.min(initial=0) < 0 or ids.max(initial=0) >= vocab_size:
            raise self._fail(f"token id out of range [0, {vocab_size})")
        self._cache = ids
        return self.params["W"][ids]

    def backward(self, dout: np.ndarray) -> np.ndarray:
        ids = self._require_cache()
        if self.trainable:
            np.add.at(self.grads["W"], ids, dout)
            self.grads["W"][PAD_ID] = 0.0
        return np.zeros(ids.shape, dtype=dout.dtype)  # type: ignore[union-attr]


class ReLU(Layer):
    kind = LayerKind.RELU

    def forward(
        self, x: np.ndarray, *, training: bool = False, rng: np.random.Generator | None = None
    ) -> np.ndarray:
        mask = x > 0
        self._cache = mask
        return np.where(mask, x, 0.0)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        mask = self._require_cache()
        return dout * mask  # type: ignore[operator]


class Sigmoid(Layer):
    kind = LayerKind.SIGMOID

    def forward(
        self, x: np.ndarray, *, training: bool = False, rng: np.random.Generator | None = None
    ) -> np.ndarray:
        y = stable_sigmoid(x)
        self._cache = y
        return y

    def backward(self, dout: np.ndarray) -> np.ndarray:
        y = self._require_cache()
        return dout * y * (1.0 - y)  # type: ignore[operator]


class SoftmaxRows(Layer):
    kind = LayerKind.SOFTMAX_ROWS

    def forward(
        self, x: np.ndarray, *, training: bool = False, rng: np.random.Generator | None = None
    ) -> np.ndarray:
        y = softmax_rows(x)
        self._cache = y
        return y

    def backward(self, dout: np.ndarray) -> np.ndarray:
        y = self._require_cache()
        return y * (dout - (dout * y).sum(axis=-1, keepdims=True))  # type: ignore[operator]


class Dropout(Layer):
    """逆ドロップアウト. 推論時（training=False）は恒等写像."""

    kind = LayerKind.DROPOUT

    def __init__(self, name: str, rate: float = 0.5) -> None:
        super().__init__(name)
        self.rate = rate

    def forward(
        self, x: np.ndarray, *, training: bool = False, rng: np.random.Generator | None = None
    ) -> np.ndarray:
        if not training or self.rate == 0.0:
            self._cache = np.ones(1, dtype=x.dtype)
            return x
        if rng is None:
            raise self._fail("dropout in training mode requires an explicit rng")
        mask = (rng.random(x.shape) >= self.rate).astype(x.dtype) / (1.0 - self.rate)
        self._cache = mask
        return x * mask

    def backward(self, dout: np.ndarray) -> np.ndarray:
        mask = self._require_cache()
        return dout * mask  # type: ignore[operator]

    def spec(self) -> LayerSpec:
        spec = super().spec()
        spec.options = {"rate": self.rate}
        return spec


class Flatten(Layer):
    kind = LayerKind.FLATTEN

    def forward(
        self, x: np.ndarray, *, training: bool = False, rng: np.random.Generator | None = None
    ) -> np.ndarray:
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        shape = self._require_cache()
        return dout.reshape(shape)  # type: ignore[arg-type]


class Concat(Layer):
    """チャネル軸（axis=1）での連結. 入力はテンソルの列."""

    kind = LayerKind.CONCAT

    def __init__(self, name: str, axis: int = 1) -> None:
        super().__init__(name)
        self.axis = axis

    def forward(  # type: ignore[override]
        self,
        x: Sequence[np.ndarray],
        *,
        training: bool = False,
        rng: np.random.Generator | None = None,
    ) -> np.ndarray:
        inputs = list(x)
        reference = inputs[0].shape
        for item in inputs[1:]:
            other = item.shape[: self.axis] + item.shape[self.axis + 1 :]
            if other != reference[: self.axis] + reference[self.axis + 1 :]:
                raise self._fail(f"cannot concatenate {reference} with {item.shape}")
        self._cache = [item.shape[self.axis] for item in inputs]
        return np.concatenate(inputs, axis=self.axis)

    def backward(self, dout: np.ndarray) -> list[np.ndarray]:  # type: ignore[override]
        sizes = self._require_cache()
        splits = np.cumsum(sizes)[:-1]  # type: ignore[arg-type]
        return np.split(dout, splits, axis=self.axis)

    def spec(self) -> LayerSpec:
        spec = super().spec()
        spec.options = {"axis": float(self.axis)}
        return spec
