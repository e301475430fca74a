import numpy as np
import pytest

from app.core.exception import ConfigError, CorpusError, NumericsError
from app.tracking_workflow.language import tokenize
from app.tracking_workflow.numerics import grad_check
from app.tracking_workflow.salnet import (
    SalnetModel,
    SalnetTrainer,
    bce_grad,
    bce_loss,
    graph_step,
    load_salnet,
    mine_triplets,
    total_loss,
    triplet_grad,
    triplet_loss,
)
from app.tracking_workflow.salnet.model import conv_output_size
from app.tracking_workflow.salnet.trainer import SALNET_CHECKPOINT, SALNET_LOG


def test_bce_matches_closed_form():
    p = np.array([0.9, 0.2])
    y = np.array([1.0, 0.0])
    assert bce_loss(p, y) == pytest.approx(-np.log(0.9) - np.log(0.8))
    assert np.allclose(bce_grad(p, y), [-1 / 0.9, 1 / 0.8])


def test_bce_stays_finite_at_saturation():
    p = np.array([0.0, 1.0])
    y = np.array([1.0, 0.0])
    assert np.isfinite(bce_loss(p, y))
    assert np.all(bce_grad(p, y) == 0.0)


def test_triplet_loss_is_hinged():
    v = np.zeros(2)
    near, far = np.array([[0.1, 0.0]]), np.array([[3.0, 0.0]])
    assert triplet_loss(v, near, far) == 0.0
    assert triplet_loss(v, far, near) == pytest.approx(9.0 - 0.01 + 1.0)
    d_v, d_pos, d_neg = triplet_grad(v, near, far)
    assert np.all(d_v == 0) and np.all(d_pos == 0) and np.all(d_neg == 0)


def test_triplet_gradient_matches_finite_differences(rng):
    v = rng.standard_normal(4)
    positives = rng.standard_normal((5, 4))
    negatives = rng.standard_normal((5, 4)) * 0.5

    def compute():
        d_v, d_pos, d_neg = triplet_grad(v, positives, negatives, 2.0)
        return triplet_loss(v, positives, negatives, 2.0), {"v": d_v, "p": d_pos, "n": d_neg}

    assert grad_check(compute, {"v": v, "p": positives, "n": negatives}) < 1e-5


def test_triplet_rejects_width_mismatch():
    with pytest.raises(NumericsError):
        triplet_loss(np.zeros(3), np.zeros((2, 3)), np.zeros((2, 4)))


def test_total_loss_weights_triplet_term():
    assert total_loss(2.0, 4.0, 0.5) == 4.0
    assert total_loss(2.0, 4.0, 0.0) == 2.0
    with pytest.raises(NumericsError):
        total_loss(1.0, 1.0, -0.1)


def test_mine_triplets_caps_and_keeps_labels(rng):
    pos, neg = mine_triplets(np.array([0, 1]), np.array([5, 6, 7]), 100, rng)
    assert len(pos) == 6 and set(pos) == {0, 1} and set(neg) == {5, 6, 7}
    pos, neg = mine_triplets(np.arange(8), np.arange(8, 40), 64, rng)
    assert len(pos) == 64
    assert len(set(zip(pos.tolist(), neg.tolist(), strict=True))) == 64
    pos, _ = mine_triplets(np.zeros(0, dtype=int), np.arange(3), 64, rng)
    assert len(pos) == 0


def test_model_layout(tiny_config, vocab, rng):
    model = SalnetModel(tiny_config, 3, len(vocab), rng)
    assert conv_output_size(16) == 4
    assert model.num_domains == 3
    params = model.parameters()
    assert params["fc.fc5.W"].shape == (tiny_config.feature_dim, tiny_config.fc1_dim)
    assert params["heads.2.fc6.W"].shape == (2, 2 * tiny_config.feature_dim)
    assert "gcn.W0" in params and "language.embedding.W" in params
    features = model.extract_features(rng.uniform(-0.5, 0.5, (5, 3, 16, 16)))
    assert features.shape == (5, tiny_config.feature_dim)
    assert np.all(features >= 0)
    with pytest.raises(ConfigError):
        model.head(3)
    with pytest.raises(NumericsError):
        model.extract_features(np.zeros((1, 3, 15, 15)))


def test_model_without_gcn_uses_raw_features(tiny_config, vocab, rng):
    model = SalnetModel(tiny_config.model_copy(update={"node_count": 0}), 1, len(vocab), rng)
    assert model.gcn is None
    assert model.parameters()["heads.0.fc6.W"].shape == (2, tiny_config.feature_dim)


def test_backbone_features_feed_a_two_class_head(tiny_config, vocab, rng):
    model = SalnetModel(tiny_config.model_copy(update={"node_count": 0}), 2, len(vocab), rng)
    features = model.backbone_forward(rng.uniform(-0.5, 0.5, (6, 3, 16, 16)))
    assert features.shape == (6, tiny_config.feature_dim)
    scores = model.head_score(features, 1)
    assert scores.shape == (6, 2)
    assert np.allclose(scores.sum(axis=1), 1.0)
    assert np.all((scores > 0) & (scores < 1))


def test_graph_step_fills_gradients(tiny_config, vocab, rng):
    model = SalnetModel(tiny_config, 2, len(vocab), rng)
    patches = rng.uniform(-0.5, 0.5, (8, 3, 16, 16))
    labels = np.array([1, 1, 0, 0, 0, 0, 0, 0], dtype=float)
    tokens = np.asarray(tokenize("the red square moving left", vocab))
    model.zero_grad()
    loss = graph_step(model, patches, labels, 1, tokens, tiny_config, rng, training=False)
    assert loss.total == pytest.approx(loss.classification + tiny_config.triplet_lambda * loss.triplet)
    grads = model.gradients()
    assert np.any(grads["heads.1.fc6.W"] != 0)
    assert np.all(grads["heads.0.fc6.W"] == 0)
    assert np.any(grads["conv.conv1.W"] != 0)


def test_graph_step_without_language_ignores_sentence(tiny_config, vocab, rng):
    config = tiny_config.model_copy(update={"use_language": False})
    model = SalnetModel(config, 1, len(vocab), rng)
    patches = rng.uniform(-0.5, 0.5, (8, 3, 16, 16))
    labels = np.array([1, 0, 0, 0, 1, 0, 0, 0], dtype=float)
    model.zero_grad()
    loss = graph_step(model, patches, labels, 0, np.zeros(16, dtype=int), config, rng, training=False)
    assert loss.triplet == 0.0 and loss.total == loss.classification
    assert all(np.all(v == 0) for k, v in model.gradients().items() if k.startswith("language."))


def test_trainer_requires_two_sequences(tiny_config, blob_manager, vocab, train_sequences):
    with pytest.raises(CorpusError):
        SalnetTrainer(tiny_config, blob_manager).train(train_sequences[:1], vocab)


def test_trainer_updates_only_touched_heads(tiny_config, blob_manager, vocab, train_sequences):
    config = tiny_config.model_copy(update={"salnet_iterations": 1, "salnet_batch_graphs": 2})
    initial = SalnetModel(config, len(train_sequences), len(vocab), np.random.default_rng(config.seed))
    trained = SalnetTrainer(config, blob_manager).train(train_sequences, vocab).model
    before, after = initial.parameters(), trained.parameters()
    assert not np.array_equal(before["heads.0.fc6.W"], after["heads.0.fc6.W"])
    assert not np.array_equal(before["heads.1.fc6.W"], after["heads.1.fc6.W"])
    assert np.array_equal(before["heads.2.fc6.W"], after["heads.2.fc6.W"])
    assert np.array_equal(before["heads.3.fc6.W"], after["heads.3.fc6.W"])


def test_trainer_saves_and_reloads(tiny_config, blob_manager, vocab, train_sequences, tmp_path):
    run_dir = tmp_path / "salnet"
    result = SalnetTrainer(tiny_config, blob_manager).train(train_sequences, vocab, run_dir)
    assert len(result.history) == tiny_config.salnet_iterations
    assert all(np.isfinite(record.Loss) for record in result.history)
    assert (run_dir / SALNET_CHECKPOINT).exists()
    log_lines = (run_dir / SALNET_LOG).read_text(encoding="utf-8").splitlines()
    assert log_lines[0] == "iteration,L_c,L_t,Loss"
    assert len(log_lines) == tiny_config.salnet_iterations + 1

    model, loaded_vocab = load_salnet(blob_manager, run_dir)
    assert model.num_domains == len(train_sequences)
    patches = np.random.default_rng(0).uniform(-0.5, 0.5, (3, 3, 16, 16))
    assert np.allclose(model.extract_features(patches), result.model.extract_features(patches))
    assert len(loaded_vocab) == len(vocab)


def test_training_is_deterministic(tiny_config, blob_manager, vocab, train_sequences):
    a = SalnetTrainer(tiny_config, blob_manager).train(train_sequences, vocab)
    b = SalnetTrainer(tiny_config, blob_manager).train(train_sequences, vocab)
    assert [r.Loss for r in a.history] == [r.Loss for r in b.history]


def test_loss_identities():
    assert bce_loss(np.array([0.5]), np.array([1.0])) == pytest.approx(np.log(2.0), abs=1e-12)
    v = np.array([0.3, -0.2])
    same = np.array([[1.0, 1.0]])
    assert triplet_loss(v, same, same, alpha=0.7) == pytest.approx(0.7)
    # λ enters linearly
    lt = triplet_loss(v, same, same)
    assert total_loss(1.5, lt, 0.2) - total_loss(1.5, lt, 0.1) == pytest.approx(0.1 * lt)
