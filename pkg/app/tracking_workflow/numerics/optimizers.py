"""SGD / Adam / Adagrad with per-parameter accumulators."""

from dataclasses import dataclass, field

import numpy as np

from app.core.exception import NumericsError
from app.domain.enums import BaseEnum
from app.tracking_workflow.constants import ADAGRAD_EPS, ADAM_BETA1, ADAM_BETA2, ADAM_EPS


class OptimizerKind(BaseEnum):
    SGD = "sgd"
    ADAM = "adam"
    ADAGRAD = "adagrad"


@dataclass
class OptimizerState:
    """オプティマイザの状態.

    アキュムレータはパラメータ名ごとに保持し、初めて勾配を受け取った時点で作る。
    Adamのバイアス補正はパラメータごとのステップ数で行う。
    """

    kind: OptimizerKind
    lr: float
    step: int = 0
    first_moment: dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: dict[str, np.ndarray] = field(default_factory=dict)
    param_steps: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.lr <= 0:
            raise NumericsError("OptimizerState", self.kind.value, f"lr must be > 0 (got {self.lr})")


def optimizer_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: OptimizerState,
) -> OptimizerState:
    """勾配が与えられたパラメータだけをその場で更新.

    Args:
    ----
        params: パラメータ名 → 配列（その場で書き換える）
        grads: パラメータ名 → 勾配（ここに無いパラメータは一切変更しない）
        state: オプティマイザ状態

    Returns:
    -------
        更新後の状態（同じオブジェクト）
    """
    for key, grad in grads.items():
        if key not in params:
            raise NumericsError("optimizer_step", key, "gradient for unknown parameter")
        if grad.shape != params[key].shape:
            raise NumericsError(
                "optimizer_step", key, f"shape mismatch {grad.shape} vs {params[key].shape}"
            )
        if not np.all(np.isfinite(grad)):
            raise NumericsError("optimizer_step", key, "non-finite gradient, step refused")

    for key, grad in grads.items():
        param = params[key]
        if state.kind == OptimizerKind.SGD:
            param -= state.lr * grad
        elif state.kind == OptimizerKind.ADAM:
            m = state.first_moment.setdefault(key, np.zeros_like(param))
            v = state.second_moment.setdefault(key, np.zeros_like(param))
            t = state.param_steps.get(key, 0) + 1
            state.param_steps[key] = t
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * grad
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * grad * grad
            m_hat = m / (1.0 - ADAM_BETA1**t)
            v_hat = v / (1.0 - ADAM_BETA2**t)
            param -= state.lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
        elif state.kind == OptimizerKind.ADAGRAD:
            acc = state.second_moment.setdefault(key, np.zeros_like(param))
            acc += grad * grad
            param -= state.lr * grad / (np.sqrt(acc) + ADAGRAD_EPS)
    state.step += 1
    return state


class Optimizer:
    """パラメータ辞書とオプティマイザ状態の組."""

    def __init__(self, kind: OptimizerKind, lr: float) -> None:
        self.state = OptimizerState(kind=kind, lr=lr)

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        optimizer_step(params, grads, self.state)
