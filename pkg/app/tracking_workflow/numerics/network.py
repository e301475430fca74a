"""Ordered layer stacks."""

import numpy as np

from app.core.exception import NumericsError
from app.tracking_workflow.numerics.layers import Layer, LayerSpec
from app.tracking_workflow.numerics.module import Module


class Sequential(Module):
    """層を順に適用するネットワーク.

    forward は各層の出力を `activations` に保持し、backward はそれを前提に
    逆伝播する。dropout が有効な場合、同じ rng シードなら出力は決定的。
    """

    def __init__(self, name: str, layers: list[Layer]) -> None:
        names = [layer.name for layer in layers]
        if len(set(names)) != len(names):
            raise NumericsError(name, "layers", f"duplicate layer names: {names}")
        self.name = name
        self.layers = layers
        self.activations: dict[str, np.ndarray] = {}

    def children(self) -> dict[str, Module]:
        return {layer.name: layer for layer in self.layers}

    def __getitem__(self, name: str) -> Layer:
        for layer in self.layers:
            if layer.name == name:
                return layer
        raise KeyError(name)

    def forward(
        self,
        x: np.ndarray,
        *,
        training: bool = False,
        rng: np.random.Generator | None = None,
    ) -> np.ndarray:
        activations = {"input": x}
        out = x
        for layer in self.layers:
            try:
                out = layer.forward(out, training=training, rng=rng)
            except ValueError as e:
                raise NumericsError(self.name, layer.name, f"shape mismatch: {e}") from e
            activations[layer.name] = out
        self.activations = activations
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if not self.activations:
            raise NumericsError(self.name, "backward", "backward called before forward")
        for layer in reversed(self.layers):
            dout = layer.backward(dout)
        return dout

    def freeze(self, layer_names: list[str]) -> None:
        """指定した層のパラメータを凍結（勾配を公開しない）."""
        for name in layer_names:
            self[name].set_trainable(False)

    def specs(self) -> list[LayerSpec]:
        return [layer.spec() for layer in self.layers]
