"""Central finite-difference gradient checker."""

from collections.abc import Callable

import numpy as np

from app.core.exception import NumericsError
from app.tracking_workflow.constants import GRAD_CHECK_EPS, GRAD_CHECK_FLOOR
from app.tracking_workflow.numerics.network import Sequential

# (loss, 解析勾配) を返す関数. 勾配のキーは params のキーと対応する
LossAndGrads = Callable[[], tuple[float, dict[str, np.ndarray]]]


def grad_check(
    compute: LossAndGrads,
    params: dict[str, np.ndarray],
    eps: float = GRAD_CHECK_EPS,
    max_entries: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """解析勾配と中心差分の最大相対誤差を返す.

    相対誤差は |a - n| / max(|a|, |n|, 1e-8)。params の配列はその場で摂動され、
    評価後に元の値へ戻される。

    Args:
    ----
        compute: 損失と解析勾配を返す関数（params を参照して計算すること）
        params: 検査するパラメータ（入力を含めてもよい）
        eps: 差分の刻み
        max_entries: パラメータあたりの検査要素数の上限（Noneなら全要素）
        rng: max_entries 指定時の要素選択に使う乱数

    Returns:
    -------
        全パラメータを通じた最大相対誤差
    """
    loss, analytic = compute()
    if not np.isfinite(loss):
        raise NumericsError("grad_check", "loss", f"non-finite loss {loss}")
    analytic = {key: np.array(value, copy=True) for key, value in analytic.items()}

    worst = 0.0
    for key, array in params.items():
        if array.dtype != np.float64:
            raise NumericsError("grad_check", key, "gradient checks require float64")
        if key not in analytic:
            raise NumericsError("grad_check", key, "no analytic gradient")
        flat_indices = np.arange(array.size)
        if max_entries is not None and array.size > max_entries:
            chooser = rng or np.random.default_rng(0)
            flat_indices = chooser.choice(array.size, size=max_entries, replace=False)
        for flat in flat_indices:
            index = np.unravel_index(flat, array.shape)
            original = array[index]
            array[index] = original + eps
            loss_plus, _ = compute()
            array[index] = original - eps
            loss_minus, _ = compute()
            array[index] = original
            if not (np.isfinite(loss_plus) and np.isfinite(loss_minus)):
                raise NumericsError("grad_check", key, "non-finite loss under perturbation")
            numeric = (loss_plus - loss_minus) / (2.0 * eps)
            exact = analytic[key][index]
            denom = max(abs(exact), abs(numeric), GRAD_CHECK_FLOOR)
            worst = max(worst, abs(exact - numeric) / denom)
    return float(worst)


def check_network(
    network: Sequential,
    x: np.ndarray,
    eps: float = GRAD_CHECK_EPS,
    rng: np.random.Generator | None = None,
    include_input: bool = True,
    max_entries: int | None = None,
) -> float:
    """ネットワーク出力とランダム係数の内積を損失として grad_check する."""
    rng = rng or np.random.default_rng(0)
    sample_output = network.forward(x)
    weights = rng.standard_normal(sample_output.shape)

    def compute() -> tuple[float, dict[str, np.ndarray]]:
        out = network.forward(x)
        network.zero_grad()
        dx = network.backward(weights)
        grads = dict(network.gradients())
        grads["input"] = dx
        return float(np.sum(out * weights)), grads

    trainable = network.gradients()
    params = {k: v for k, v in network.parameters().items() if k in trainable}
    if include_input:
        params["input"] = x
    return grad_check(compute, params, eps=eps, max_entries=max_entries, rng=rng)
