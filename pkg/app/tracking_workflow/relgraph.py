"""Proposal relation graph and stacked graph convolutions.

Forward chain for n proposal features X (n x k):
    S = -pairwise Euclidean distance
    W = row softmax of S over off-diagonal entries (W_ii = 0)
    G = row softmax of W (diagonal term included)
    Z_{l+1} = relu(G Z_l W_l), last layer without relu
    output = [X || Z_L]
"""

from dataclasses import dataclass

import numpy as np

from app.core.exception import GraphError
from app.tracking_workflow.numerics import Module, default_dtype, softmax_rows
from app.tracking_workflow.numerics.arrays import kaiming_uniform


@dataclass
class AffinityGraph:
    """ノード特徴と正規化前後の関係行列."""

    node_features: np.ndarray  # X (n, k)
    distances: np.ndarray  # ||x_i - x_j|| (n, n)
    raw_affinity: np.ndarray  # W (n, n), 対角0
    normalized: np.ndarray  # G (n, n), 行和1

    @property
    def n(self) -> int:
        return int(self.node_features.shape[0])


def _check_matrix(X: np.ndarray, name: str) -> None:
    if X.ndim != 2:
        raise GraphError("relgraph", name, f"expected a matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise GraphError("relgraph", name, "non-finite entries")


def pairwise_distances(X: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - X[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def pairwise_similarity(X: np.ndarray) -> np.ndarray:
    """S_ij = -||x_i - x_j||_2（対称、対角0）."""
    _check_matrix(X, "pairwise_similarity")
    if X.shape[0] < 2:
        raise GraphError("relgraph", "pairwise_similarity", f"need n >= 2 nodes, got {X.shape[0]}")
    return -pairwise_distances(X)


def affinity_matrix(S: np.ndarray) -> np.ndarray:
    """対角を除いた行softmax. W_ii = 0、非対角の行和は1."""
    _check_matrix(S, "affinity_matrix")
    n = S.shape[0]
    if S.shape != (n, n):
        raise GraphError("relgraph", "affinity_matrix", f"expected square matrix, got {S.shape}")
    off_diagonal = ~np.eye(n, dtype=bool)
    masked = np.where(off_diagonal, S, -np.inf)
    row_max = masked.max(axis=1, keepdims=True)
    exp = np.where(off_diagonal, np.exp(masked - row_max), 0.0)
    return exp / exp.sum(axis=1, keepdims=True)


def normalize_graph(W: np.ndarray) -> np.ndarray:
    """対角項を含む行softmax."""
    _check_matrix(W, "normalize_graph")
    return softmax_rows(W)


def gcn_layer(G: np.ndarray, Xp: np.ndarray, Wt: np.ndarray, final: bool = False) -> np.ndarray:
    """Z = relu(G Xp Wt)、最終層はReLUなし."""
    n = G.shape[0]
    if G.shape != (n, n) or Xp.shape[0] != n or Xp.shape[1] != Wt.shape[0]:
        raise GraphError(
            "relgraph", "gcn_layer",
            f"dims do not chain: G {G.shape}, X' {Xp.shape}, W {Wt.shape}",
        )
    Z = G @ Xp @ Wt
    return Z if final else np.maximum(Z, 0.0)


def build_graph(X: np.ndarray, single_normalization: bool = False) -> AffinityGraph:
    S = pairwise_similarity(X)
    W = affinity_matrix(S)
    G = W if single_normalization else normalize_graph(W)
    return AffinityGraph(node_features=X, distances=-S, raw_affinity=W, normalized=G)


class GcnStack(Module):
    """GCN層の積み重ね. 隠れ層の幅は入力幅 k と同じ.

    enhance_features / backward で X と全層の重みへ勾配を流す。
    """

    def __init__(
        self,
        in_features: int,
        rng: np.random.Generator,
        depth: int = 3,
        out_features: int | None = None,
        single_normalization: bool = False,
    ) -> None:
        if depth < 1:
            raise GraphError("GcnStack", "depth", f"depth must be >= 1 (got {depth})")
        self.depth = depth
        self.in_features = in_features
        self.out_features = out_features or in_features
        self.single_normalization = single_normalization
        widths = [in_features] * depth + [self.out_features]
        self.weights = {
            f"W{i}": kaiming_uniform((widths[i], widths[i + 1]), widths[i], rng)
            for i in range(depth)
        }
        self.grads = {key: np.zeros_like(value) for key, value in self.weights.items()}
        self._cache: tuple[AffinityGraph, list[np.ndarray], list[np.ndarray]] | None = None

    def own_parameters(self) -> dict[str, np.ndarray]:
        return self.weights

    def own_gradients(self) -> dict[str, np.ndarray]:
        return self.grads

    @property
    def output_width(self) -> int:
        return self.in_features + self.out_features

    def enhance_features(self, X: np.ndarray) -> np.ndarray:
        """[X || Z_final] を返す（列方向の連結）."""
        if X.shape[1] != self.in_features:
            raise GraphError(
                "GcnStack", "enhance_features",
                f"expected width {self.in_features}, got {X.shape[1]}",
            )
        graph = build_graph(X.astype(default_dtype(), copy=False), self.single_normalization)
        G = graph.normalized
        inputs: list[np.ndarray] = []
        pre_activations: list[np.ndarray] = []
        Z = X
        for i in range(self.depth):
            final = i == self.depth - 1
            inputs.append(Z)
            pre = G @ Z @ self.weights[f"W{i}"]
            pre_activations.append(pre)
            Z = pre if final else np.maximum(pre, 0.0)
        self._cache = (graph, inputs, pre_activations)
        return np.concatenate([X, Z], axis=1)

    def backward(self, d_out: np.ndarray) -> np.ndarray:
        """出力勾配 (n, k + c) から X への勾配を返し、重み勾配を加算する."""
        if self._cache is None:
            raise GraphError("GcnStack", "backward", "backward called before enhance_features")
        graph, inputs, pre_activations = self._cache
        G = graph.normalized
        k = self.in_features
        dX = d_out[:, :k].copy()
        dZ = d_out[:, k:]
        dG = np.zeros_like(G)
        for i in reversed(range(self.depth)):
            final = i == self.depth - 1
            d_pre = dZ if final else dZ * (pre_activations[i] > 0)
            weight = self.weights[f"W{i}"]
            H = G @ inputs[i]
            if self.trainable:
                self.grads[f"W{i}"] += H.T @ d_pre
            dH = d_pre @ weight.T
            dG += dH @ inputs[i].T
            dZ = G.T @ dH
        dX += dZ

        # G = softmax_rows(W)
        if self.single_normalization:
            dW = dG
        else:
            dW = G * (dG - np.sum(dG * G, axis=1, keepdims=True))
        # W = 対角除外softmax(S)
        W = graph.raw_affinity
        dS = W * (dW - np.sum(dW * W, axis=1, keepdims=True))
        # S = -D
        dD = -dS
        D = graph.distances
        with np.errstate(divide="ignore", invalid="ignore"):
            M = np.where(D > 0, (dD + dD.T) / D, 0.0)
        X = graph.node_features
        dX += M.sum(axis=1, keepdims=True) * X - M @ X
        return dX
