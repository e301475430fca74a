"""Parameter container base class."""

from abc import ABC

import numpy as np


class Module(ABC):
    """パラメータと勾配を名前付きで公開する基底クラス.

    子モジュールのパラメータは `子の名前.パラメータ名` で平坦化される。
    凍結されたモジュールは勾配を公開しないため、オプティマイザから更新されない。
    """

    trainable: bool = True

    @property
    def __name__(self) -> str:
        return str(self.__class__.__name__)

    def children(self) -> dict[str, "Module"]:
        return {}

    def own_parameters(self) -> dict[str, np.ndarray]:
        return {}

    def own_gradients(self) -> dict[str, np.ndarray]:
        return {}

    def parameters(self) -> dict[str, np.ndarray]:
        params = dict(self.own_parameters())
        for prefix, child in self.children().items():
            for key, value in child.parameters().items():
                params[f"{prefix}.{key}"] = value
        return params

    def gradients(self) -> dict[str, np.ndarray]:
        grads = dict(self.own_gradients()) if self.trainable else {}
        for prefix, child in self.children().items():
            for key, value in child.gradients().items():
                grads[f"{prefix}.{key}"] = value
        return grads

    def zero_grad(self) -> None:
        for grad in self.own_gradients().values():
            grad.fill(0.0)
        for child in self.children().values():
            child.zero_grad()

    def set_trainable(self, trainable: bool) -> None:
        self.trainable = trainable
        for child in self.children().values():
            child.set_trainable(trainable)
