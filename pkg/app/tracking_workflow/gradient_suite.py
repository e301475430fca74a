"""Toy-scale gradient checks over every layer kind and the composite networks."""

from collections.abc import Callable

import numpy as np
from pydantic import BaseModel, Field

from app.core.logging import LogLevel, log
from app.tracking_workflow.config import RunConfig
from app.tracking_workflow.gpgnet.model import GpgnetModel
from app.tracking_workflow.numerics import (
    Conv1d,
    Conv2d,
    Dropout,
    Embedding,
    Flatten,
    Linear,
    ReLU,
    Sequential,
    Sigmoid,
    SoftmaxRows,
    UpsampleConv2d,
    check_network,
    grad_check,
)
from app.tracking_workflow.relgraph import GcnStack
from app.tracking_workflow.salnet.losses import mean_bce_grad, mean_bce_loss
from app.tracking_workflow.salnet.model import SalnetModel
from app.tracking_workflow.salnet.trainer import graph_step

GRAD_TOLERANCE = 1e-5
TOY_VOCAB = 12


class GradCheckResult(BaseModel):
    name: str = Field(title="検査名")
    max_error: float = Field(title="最大相対誤差")
    passed: bool = Field(title="許容誤差以内か")


def _layer_checks(rng: np.random.Generator) -> dict[str, Callable[[], float]]:
    def conv2d() -> float:
        net = Sequential("n", [Conv2d("c", 2, 3, 3, rng, stride=2, padding=1)])
        return check_network(net, rng.standard_normal((2, 2, 6, 6)), rng=rng)

    def conv1d() -> float:
        net = Sequential("n", [Conv1d("c", 3, 2, 3, rng)])
        return check_network(net, rng.standard_normal((2, 3, 7)), rng=rng)

    def upsample() -> float:
        net = Sequential("n", [UpsampleConv2d("u", 2, 2, 3, rng)])
        return check_network(net, rng.standard_normal((1, 2, 3, 3)), rng=rng)

    def linear_relu() -> float:
        net = Sequential("n", [Linear("l", 5, 4, rng), ReLU("r")])
        return check_network(net, rng.standard_normal((3, 5)), rng=rng)

    def sigmoid() -> float:
        net = Sequential("n", [Linear("l", 4, 3, rng), Sigmoid("s")])
        return check_network(net, rng.standard_normal((3, 4)), rng=rng)

    def softmax() -> float:
        net = Sequential("n", [Linear("l", 4, 2, rng), SoftmaxRows("s")])
        return check_network(net, rng.standard_normal((3, 4)), rng=rng)

    def flatten_dropout() -> float:
        # 推論時のドロップアウトは恒等写像
        net = Sequential("n", [Flatten("f"), Dropout("d", 0.5), Linear("l", 12, 2, rng)])
        return check_network(net, rng.standard_normal((2, 3, 2, 2)), rng=rng)

    def embedding() -> float:
        net = Sequential("n", [Embedding("e", TOY_VOCAB, 3, rng)])
        ids = rng.integers(1, TOY_VOCAB, size=(2, 5))
        return check_network(net, ids, rng=rng, include_input=False)

    return {
        "conv2d": conv2d,
        "conv1d": conv1d,
        "upsample_conv2d": upsample,
        "linear_relu": linear_relu,
        "sigmoid": sigmoid,
        "softmax_rows": softmax,
        "flatten_dropout": flatten_dropout,
        "embedding": embedding,
    }


def _enhance_features_check(rng: np.random.Generator) -> float:
    X = rng.standard_normal((6, 4))
    stack = GcnStack(4, rng, depth=3)
    weights = rng.standard_normal((6, 8))

    def compute() -> tuple[float, dict[str, np.ndarray]]:
        out = stack.enhance_features(X)
        stack.zero_grad()
        dX = stack.backward(weights)
        return float(np.sum(out * weights)), {**stack.gradients(), "X": dX}

    return grad_check(compute, {**stack.parameters(), "X": X})


def _toy_config() -> RunConfig:
    return RunConfig(
        width_scale=4 / 512,
        fc_ratio=2,
        patch_size=11,
        conv_channels=(2, 2, 2),
        node_count=6,
        triplet_lambda=0.5,
        max_triplets=4,
        frame_height=32,
        frame_width=32,
        encoder_channels=(2, 2, 2),
    )


def _salnet_loss_check(rng: np.random.Generator, max_entries: int) -> float:
    """分類損失 + GCN + トリプレット損失の合成を通した検査."""
    config = _toy_config()
    model = SalnetModel(config, num_domains=1, vocab_size=TOY_VOCAB, rng=rng)
    patches = rng.uniform(-0.5, 0.5, size=(6, 3, config.patch_size, config.patch_size))
    labels = np.array([1, 1, 0, 0, 0, 0])
    token_ids = np.array([2, 3, 4, 5] + [0] * 12)

    def compute() -> tuple[float, dict[str, np.ndarray]]:
        model.zero_grad()
        # トリプレットの組を毎回同じにする
        result = graph_step(model, patches, labels, 0, token_ids, config, np.random.default_rng(0), training=False)
        return result.total, model.gradients()

    params = {k: v for k, v in model.parameters().items() if k in model.gradients()}
    return grad_check(compute, params, max_entries=max_entries, rng=rng)


def _gpgnet_check(rng: np.random.Generator, max_entries: int) -> float:
    """エンコード + 融合 + デコードを通した平均BCEの検査."""
    config = _toy_config()
    model = GpgnetModel(config, TOY_VOCAB, rng)
    frames = rng.uniform(-0.5, 0.5, size=(2, 3, *config.frame_shape))
    targets = rng.uniform(-0.5, 0.5, size=(2, 3, *config.frame_shape))
    token_ids = np.array([[2, 3, 0, 0] + [0] * 12, [4, 5, 6, 0] + [0] * 12])
    masks = (rng.uniform(size=(2, *config.frame_shape)) > 0.5).astype(np.float64)

    def compute() -> tuple[float, dict[str, np.ndarray]]:
        attention = model.forward(frames, targets, token_ids)
        model.zero_grad()
        model.backward(mean_bce_grad(attention, masks))
        return mean_bce_loss(attention, masks), model.gradients()

    params = {k: v for k, v in model.parameters().items() if k in model.gradients()}
    return grad_check(compute, params, max_entries=max_entries, rng=rng)


def run_gradient_suite(
    seed: int = 0, tolerance: float = GRAD_TOLERANCE, max_entries: int = 6
) -> list[GradCheckResult]:
    """全ての勾配検査を倍精度で実行する.

    Args:
    ----
        seed: 重みと入力の乱数シード
        tolerance: 許容する最大相対誤差
        max_entries: 合成ネットワークでパラメータごとに検査する要素数

    Returns:
    -------
        検査ごとの結果
    """
    rng = np.random.default_rng(seed)
    checks: dict[str, Callable[[], float]] = {
        **_layer_checks(rng),
        "enhance_features": lambda: _enhance_features_check(rng),
        "salnet_composite_loss": lambda: _salnet_loss_check(rng, max_entries),
        "gpgnet_encode_decode": lambda: _gpgnet_check(rng, max_entries),
    }
    results = []
    for name, check in checks.items():
        error = check()
        result = GradCheckResult(name=name, max_error=error, passed=error <= tolerance)
        level = LogLevel.INFO if result.passed else LogLevel.ERROR
        log(level, "gradcheck", name, f"max relative error {error:.3e}")
        results.append(result)
    return results
