"""Binary cross-entropy, triplet and combined losses with their gradients."""

import numpy as np

from app.core.exception import NumericsError
from app.tracking_workflow.constants import BCE_EPS


def _clamp(p: np.ndarray) -> np.ndarray:
    return np.clip(p, BCE_EPS, 1.0 - BCE_EPS)


def bce_loss(p: np.ndarray, y: np.ndarray) -> float:
    """L_c = -Σ [y log p + (1 - y) log(1 - p)]（バッチで総和）."""
    p = _clamp(np.asarray(p, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    return float(-np.sum(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def bce_grad(p: np.ndarray, y: np.ndarray) -> np.ndarray:
    """dL_c/dp. クランプ外の p では0."""
    raw = np.asarray(p, dtype=np.float64)
    pc = _clamp(raw)
    grad = -(y / pc) + (1.0 - y) / (1.0 - pc)
    return np.where((raw < BCE_EPS) | (raw > 1.0 - BCE_EPS), 0.0, grad)


def mean_bce_loss(p: np.ndarray, y: np.ndarray) -> float:
    """画素平均のBCE（アテンション学習用）."""
    return bce_loss(p, y) / max(np.asarray(p).size, 1)


def mean_bce_grad(p: np.ndarray, y: np.ndarray) -> np.ndarray:
    return bce_grad(p, y) / max(np.asarray(p).size, 1)


def _check_triplet(v: np.ndarray, positives: np.ndarray, negatives: np.ndarray) -> None:
    if positives.shape != negatives.shape or positives.shape[-1] != v.shape[-1]:
        raise NumericsError(
            "triplet_loss", "width",
            f"anchor {v.shape}, positives {positives.shape}, negatives {negatives.shape}",
        )


def triplet_terms(
    v: np.ndarray, positives: np.ndarray, negatives: np.ndarray, alpha: float = 1.0
) -> np.ndarray:
    """各トリプレットの max(0, ||V - Vp||² - ||V - Vn||² + α)."""
    positives = np.atleast_2d(positives)
    negatives = np.atleast_2d(negatives)
    _check_triplet(v, positives, negatives)
    d_pos = np.sum((v - positives) ** 2, axis=1)
    d_neg = np.sum((v - negatives) ** 2, axis=1)
    return np.maximum(0.0, d_pos - d_neg + alpha)


def triplet_loss(
    v: np.ndarray, positives: np.ndarray, negatives: np.ndarray, alpha: float = 1.0
) -> float:
    """L_t: i番目の正例と i番目の負例を組にした総和."""
    return float(np.sum(triplet_terms(v, positives, negatives, alpha)))


def triplet_grad(
    v: np.ndarray, positives: np.ndarray, negatives: np.ndarray, alpha: float = 1.0
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(dV, dVp, dVn). ヒンジが非活性なトリプレットの勾配は0."""
    positives = np.atleast_2d(positives)
    negatives = np.atleast_2d(negatives)
    active = (triplet_terms(v, positives, negatives, alpha) > 0)[:, None]
    d_pos = np.where(active, -2.0 * (v - positives), 0.0)
    d_neg = np.where(active, 2.0 * (v - negatives), 0.0)
    d_v = np.sum(np.where(active, 2.0 * (negatives - positives), 0.0), axis=0)
    return d_v, d_pos, d_neg


def total_loss(classification: float, triplet: float, lam: float = 0.1) -> float:
    """Loss = L_c + λ L_t."""
    if lam < 0:
        raise NumericsError("total_loss", "lambda", f"lambda must be >= 0 (got {lam})")
    return classification + lam * triplet


def mine_triplets(
    positive_idx: np.ndarray,
    negative_idx: np.ndarray,
    max_triplets: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """正例×負例の全組から最大 max_triplets 組を非復元抽出."""
    pos, neg = np.meshgrid(positive_idx, negative_idx, indexing="ij")
    pos, neg = pos.ravel(), neg.ravel()
    if len(pos) > max_triplets:
        chosen = np.sort(rng.choice(len(pos), size=max_triplets, replace=False))
        pos, neg = pos[chosen], neg[chosen]
    return pos, neg
