"""Multi-domain SALNet training with joint BCE + triplet supervision."""

import time
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

import numpy as np
from pydantic import BaseModel, Field

from app.core.exception import CorpusError
from app.core.logging import LogLevel, log
from app.infrastructure.blob_manager import BaseBlobManager
from app.tracking_workflow.config import (
    RunConfig,
    build_run_config,
    dump_run_config,
    parse_run_config_text,
)
from app.tracking_workflow.geometry import from_bbox
from app.tracking_workflow.language import Vocabulary, anchor_backward, anchor_vector, tokenize
from app.tracking_workflow.numerics import Optimizer, OptimizerKind, load_checkpoint, save_checkpoint
from app.tracking_workflow.proposals import crop_patches, draw_labeled_samples
from app.tracking_workflow.salnet.losses import (
    bce_grad,
    bce_loss,
    mine_triplets,
    total_loss,
    triplet_grad,
    triplet_loss,
)
from app.tracking_workflow.salnet.model import SalnetModel
from app.tracking_workflow.synthcorpus.render import SequenceData

SALNET_CHECKPOINT = "salnet.ckpt"
SALNET_META = "salnet.json"
SALNET_LOG = "salnet_training_log.csv"
VOCAB_FILE = "vocab.txt"
SALNET_CONFIG = "salnet.cfg"


class LossRecord(BaseModel):
    """1イテレーション分の損失（グラフ平均）."""

    iteration: int = Field(title="イテレーション")
    L_c: float = Field(title="分類損失")
    L_t: float = Field(title="トリプレット損失")
    Loss: float = Field(title="総損失")


@dataclass
class GraphLoss:
    classification: float
    triplet: float
    total: float


@dataclass
class SalnetTrainingResult:
    model: SalnetModel
    vocab: Vocabulary
    history: list[LossRecord] = field(default_factory=list)
    run_dir: Path | None = None


def graph_step(
    model: SalnetModel,
    patches: np.ndarray,
    labels: np.ndarray,
    domain: int,
    token_ids: np.ndarray,
    config: RunConfig,
    rng: np.random.Generator,
    *,
    training: bool = True,
    backward: bool = True,
) -> GraphLoss:
    """1グラフ分の順伝播と逆伝播（勾配はモデルに加算される）.

    Args:
    ----
        model: 学習中のモデル
        patches: (n, 3, P, P) のサンプルパッチ
        labels: (n,) の 0/1 ラベル
        domain: 使うヘッドの番号（シーケンス番号）
        token_ids: (16,) の文のID列
        config: 設定（λ, α, トリプレット上限）
        rng: ドロップアウトとトリプレット抽出に使う乱数
        training: ドロップアウトを有効にする
        backward: 勾配を計算する

    Returns:
    -------
        L_c, L_t, Loss
    """
    features = model.backbone_forward(patches, training=training, rng=rng)
    enhanced = model.gcn.enhance_features(features) if model.gcn is not None else features
    head = model.head(domain)
    probs = head.forward(enhanced)
    positive_prob = probs[:, 0]
    classification = bce_loss(positive_prob, labels)

    triplet = 0.0
    lam = config.triplet_lambda
    pos_idx = neg_idx = np.zeros(0, dtype=np.int64)
    if config.use_language:
        sentence_feature = model.language.forward(token_ids[None])
        anchor = anchor_vector(sentence_feature)[0]
        pos_idx, neg_idx = mine_triplets(
            np.flatnonzero(labels == 1), np.flatnonzero(labels == 0), config.max_triplets, rng
        )
        if len(pos_idx):
            triplet = triplet_loss(anchor, features[pos_idx], features[neg_idx], config.triplet_margin)
    loss = total_loss(classification, triplet, lam if config.use_language else 0.0)

    if backward:
        d_probs = np.zeros_like(probs)
        d_probs[:, 0] = bce_grad(positive_prob, labels)
        d_enhanced = head.backward(d_probs)
        d_features = model.gcn.backward(d_enhanced) if model.gcn is not None else d_enhanced
        if config.use_language and len(pos_idx):
            d_anchor, d_pos, d_neg = triplet_grad(
                anchor, features[pos_idx], features[neg_idx], config.triplet_margin
            )
            d_features = d_features.copy()
            np.add.at(d_features, pos_idx, lam * d_pos)
            np.add.at(d_features, neg_idx, lam * d_neg)
            model.language.backward(anchor_backward(sentence_feature, lam * d_anchor[None]))
        model.backbone_backward(d_features)
    return GraphLoss(classification=classification, triplet=triplet, total=loss)


class SalnetTrainer:
    """シーケンスごとのヘッドを順番に使うマルチドメイン学習."""

    def __init__(
        self,
        config: RunConfig,
        blob_manager: BaseBlobManager,
        log_level: LogLevel = LogLevel.INFO,
    ) -> None:
        self.config = config
        self.blob_manager = blob_manager
        self.log = partial(log, log_level=log_level, subject=self.__class__.__name__)
        self.warn = partial(log, log_level=LogLevel.WARNING, subject=self.__class__.__name__)

    def _sample_graph(
        self, sequence: SequenceData, rng: np.random.Generator
    ) -> tuple[np.ndarray, np.ndarray]:
        """可視フレームを1枚選び、正例と負例のパッチを作る."""
        config = self.config
        t = int(rng.choice(sequence.visible_frames()))
        bbox = sequence.bbox(t)
        assert bbox is not None
        n = config.samples_per_graph
        n_pos = max(1, round(config.positive_fraction * n))
        pos, neg = draw_labeled_samples(from_bbox(bbox), n_pos, n - n_pos, rng, sequence.frame_size)
        boxes = np.concatenate([pos, neg])
        labels = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))])
        return crop_patches(sequence.frames[t], boxes, config.patch_size), labels

    def train(
        self,
        sequences: list[SequenceData],
        vocab: Vocabulary,
        run_dir: str | Path | None = None,
    ) -> SalnetTrainingResult:
        config = self.config
        if len(sequences) < 2:
            raise CorpusError(self.__class__.__name__, "train", f"need >= 2 sequences (got {len(sequences)})")
        domains = []
        for k, sequence in enumerate(sequences):
            if len(sequence.visible_frames()) == 0:
                self.warn(object="train", message=f"skip empty sequence {sequence.name}")
                continue
            domains.append(k)
        if not domains:
            raise CorpusError(self.__class__.__name__, "train", "no sequence has a visible target")

        self.log(object="hyperparameters", message=(
            f"lr={config.salnet_lr} batch_graphs={config.salnet_batch_graphs} "
            f"iterations={config.salnet_iterations} nodes={config.samples_per_graph} "
            f"gcn={config.gcn_enabled} depth={config.gcn_depth} language={config.use_language} "
            f"lambda={config.triplet_lambda} alpha={config.triplet_margin} D={config.feature_dim}"
        ))
        rng = np.random.default_rng(config.seed)
        model = SalnetModel(config, len(sequences), len(vocab), rng)
        tokens = [np.asarray(tokenize(s.sentence, vocab)) for s in sequences]
        optimizer = Optimizer(OptimizerKind.ADAM, config.salnet_lr)

        history: list[LossRecord] = []
        cursor = 0
        started = time.perf_counter()
        for iteration in range(1, config.salnet_iterations + 1):
            model.zero_grad()
            touched: set[str] = set()
            sums = np.zeros(3)
            for _ in range(config.salnet_batch_graphs):
                domain = domains[cursor % len(domains)]
                cursor += 1
                patches, labels = self._sample_graph(sequences[domain], rng)
                result = graph_step(model, patches, labels, domain, tokens[domain], config, rng)
                sums += (result.classification, result.triplet, result.total)
                touched.add(str(domain))

            grads = {
                key: grad for key, grad in model.gradients().items()
                if (not key.startswith("heads.") or key.split(".")[1] in touched)
                and (config.use_language or not key.startswith("language."))
            }
            optimizer.step(model.parameters(), grads)

            l_c, l_t, total = sums / config.salnet_batch_graphs
            history.append(LossRecord(iteration=iteration, L_c=l_c, L_t=l_t, Loss=total))
            if iteration % config.log_every == 0 or iteration == 1:
                self.log(
                    object="iteration",
                    message=f"{iteration}/{config.salnet_iterations} L_c={l_c:.4f} L_t={l_t:.4f} Loss={total:.4f}",
                )
        self.log(object="train", message=f"done in {time.perf_counter() - started:.1f}s")

        result = SalnetTrainingResult(model=model, vocab=vocab, history=history)
        if run_dir is not None:
            result.run_dir = self.save(result, Path(run_dir))
        return result

    def save(self, result: SalnetTrainingResult, run_dir: Path) -> Path:
        self.blob_manager.mkdir(run_dir)
        save_checkpoint(self.blob_manager, run_dir / SALNET_CHECKPOINT, result.model, result.model.specs())
        self.blob_manager.save_blob_as_json(
            {"num_domains": result.model.num_domains, "vocab_size": len(result.vocab)},
            run_dir / SALNET_META,
        )
        result.vocab.save(self.blob_manager, run_dir / VOCAB_FILE)
        self.blob_manager.save_blob_as_csv(
            [record.model_dump() for record in result.history],
            run_dir / SALNET_LOG,
            list(LossRecord.model_fields),
        )
        self.blob_manager.save_blob_as_str(dump_run_config(self.config), run_dir / SALNET_CONFIG)
        self.log(object="save", message=f"checkpoint written to {run_dir}")
        return run_dir


def load_salnet(blob_manager: BaseBlobManager, run_dir: str | Path) -> tuple[SalnetModel, Vocabulary]:
    """学習済みSALNetと語彙を読み込む. 構造は学習時の設定 (salnet.cfg) から復元する."""
    run_dir = Path(run_dir)
    config = build_run_config(parse_run_config_text(blob_manager.read_blob_as_str(run_dir / SALNET_CONFIG)))
    meta = blob_manager.read_blob_as_json(run_dir / SALNET_META)
    assert isinstance(meta, dict)
    vocab = Vocabulary.load(blob_manager, run_dir / VOCAB_FILE)
    model = SalnetModel(config, int(meta["num_domains"]), int(meta["vocab_size"]), np.random.default_rng(0))
    load_checkpoint(blob_manager, run_dir / SALNET_CHECKPOINT, model)
    return model, vocab
