import numpy as np
import pytest

from app.core.exception import NumericsError, ProposalError
from app.domain.enums import AttentionCue
from app.domain.models import BBox
from app.tracking_workflow.gpgnet import GpgnetModel
from app.tracking_workflow.gpgnet.attention import (
    attention_box,
    attention_box_iou,
    mean_attention,
    prefers_described,
    prepare_frame,
    prepare_target,
)
from app.tracking_workflow.gpgnet.masks import box_pixel_span, mask_from_bbox, to_png_values
from app.tracking_workflow.gpgnet.trainer import (
    GPGNET_CHECKPOINT,
    GPGNET_CONFIG,
    PREVIEW_DIR,
    GpgnetTrainer,
    evaluate_attention,
    load_gpgnet,
    predict_attention,
)
from app.tracking_workflow.language import tokenize


def test_box_pixel_span_rounds_half_up_and_clips():
    assert box_pixel_span(BBox(x=1.5, y=2.4, w=3.0, h=2.0), (10, 10)) == (2, 4, 2, 5)
    assert box_pixel_span(BBox(x=-3, y=8, w=5, h=5), (10, 10)) == (8, 10, 0, 2)


def test_mask_from_bbox_marks_target_with_one():
    mask = mask_from_bbox((6, 8), BBox(x=2, y=1, w=3, h=2))
    assert mask.dtype == np.uint8
    assert mask.sum() == 6
    assert mask[1:3, 2:5].all()
    with pytest.raises(ProposalError):
        mask_from_bbox((6, 8), BBox(x=0, y=0, w=0, h=2))


@pytest.mark.parametrize(
    "bbox",
    [BBox(x=8, y=1, w=3, h=2), BBox(x=-4, y=1, w=4, h=2), BBox(x=2, y=6, w=3, h=2), BBox(x=2, y=-5, w=3, h=2)],
)
def test_mask_from_bbox_rejects_boxes_outside_the_frame(bbox):
    with pytest.raises(ProposalError):
        mask_from_bbox((6, 8), bbox)
    assert mask_from_bbox((6, 8), BBox(x=-2, y=-1, w=3, h=2)).sum() == 1


def test_png_values_round_and_clip():
    assert to_png_values(np.array([0.0, 0.5, 1.0, 1.7, -0.2])).tolist() == [0, 128, 255, 255, 0]


def test_attention_box_picks_largest_region():
    attention = np.zeros((20, 20))
    attention[2:4, 2:4] = 0.9
    attention[10:16, 8:12] = 0.7
    assert attention_box(attention) == BBox(x=8, y=10, w=4, h=6)
    assert attention_box(np.zeros((20, 20))) is None
    assert attention_box_iou(np.zeros((20, 20)), BBox(x=0, y=0, w=4, h=4)) == 0.0


def test_preference_compares_mean_attention():
    attention = np.zeros((20, 20))
    attention[0:5, 0:5] = 0.8
    attention[10:15, 10:15] = 0.3
    target, other = BBox(x=0, y=0, w=5, h=5), BBox(x=10, y=10, w=5, h=5)
    assert mean_attention(attention, target) == pytest.approx(0.8)
    assert prefers_described(attention, target, [other])
    assert not prefers_described(attention, other, [target])


def test_prepared_inputs_have_network_shape(plain_sequence):
    frame = prepare_frame(plain_sequence.frames[0], (32, 48))
    assert frame.shape == (3, 32, 48)
    target = prepare_target(plain_sequence.frames[0], plain_sequence.bbox(0), (32, 48))
    assert target.shape == (3, 32, 48)
    assert -0.5 <= target.min() and target.max() <= 0.5


def _inputs(config, vocab, rng, n=2):
    frames = rng.uniform(-0.5, 0.5, size=(n, 3, *config.frame_shape))
    targets = rng.uniform(-0.5, 0.5, size=(n, 3, *config.frame_shape))
    tokens = np.array([tokenize("the red square moving left", vocab)] * n)
    return frames, targets, tokens


def test_model_outputs_attention_at_input_resolution(tiny_config, vocab, rng):
    model = GpgnetModel(tiny_config, len(vocab), rng)
    frames, targets, tokens = _inputs(tiny_config, vocab, rng)
    fused = model.encode_inputs(frames, targets, tokens)
    assert fused.shape == (2, 3 * tiny_config.feature_dim, *model.feature_shape)
    attention = model.decode_attention(fused)
    assert attention.shape == (2, *tiny_config.frame_shape)
    assert np.all((attention >= 0) & (attention <= 1))


def test_model_backward_reaches_every_subnetwork(tiny_config, vocab, rng):
    model = GpgnetModel(tiny_config, len(vocab), rng)
    attention = model.forward(*_inputs(tiny_config, vocab, rng))
    model.zero_grad()
    model.backward(np.ones_like(attention))
    grads = model.gradients()
    for prefix in ("frame_encoder.", "target_encoder.", "language.", "decoder."):
        assert any(np.any(v != 0) for k, v in grads.items() if k.startswith(prefix)), prefix


@pytest.mark.parametrize(
    ("cue", "silent"),
    [(AttentionCue.TARGET_ONLY, "language."), (AttentionCue.LANGUAGE_ONLY, "target_encoder.")],
)
def test_single_cue_models_ignore_the_other_input(tiny_config, vocab, rng, cue, silent):
    model = GpgnetModel(tiny_config, len(vocab), rng, cue=cue)
    attention = model.forward(*_inputs(tiny_config, vocab, rng))
    model.zero_grad()
    model.backward(np.ones_like(attention))
    assert all(np.all(v == 0) for k, v in model.gradients().items() if k.startswith(silent))


def test_call_cue_overrides_model_cue_without_changing_it(tiny_config, vocab, rng):
    inputs = _inputs(tiny_config, vocab, rng)
    joint = GpgnetModel(tiny_config, len(vocab), np.random.default_rng(3))
    language_only = GpgnetModel(tiny_config, len(vocab), np.random.default_rng(3), cue=AttentionCue.LANGUAGE_ONLY)
    attention = joint.forward(*inputs, cue=AttentionCue.LANGUAGE_ONLY)
    np.testing.assert_allclose(attention, language_only.forward(*inputs))
    assert joint.cue == AttentionCue.JOINT
    joint.zero_grad()
    joint.backward(np.ones_like(attention))
    assert all(np.all(v == 0) for k, v in joint.gradients().items() if k.startswith("target_encoder."))


def test_model_rejects_mismatched_inputs(tiny_config, vocab, rng):
    model = GpgnetModel(tiny_config, len(vocab), rng)
    frames, targets, tokens = _inputs(tiny_config, vocab, rng)
    with pytest.raises(NumericsError):
        model.forward(frames[:, :, :16], targets, tokens)
    with pytest.raises(NumericsError):
        model.forward(frames, targets[:1], tokens)
    with pytest.raises(NumericsError):
        GpgnetModel(tiny_config, len(vocab), rng).backward(np.zeros((1, 48, 64)))


def test_trainer_writes_a_loadable_run(tiny_config, blob_manager, vocab, train_sequences, tmp_path):
    run_dir = tmp_path / "gpgnet"
    result = GpgnetTrainer(tiny_config, blob_manager).train(train_sequences, vocab, run_dir)
    assert len(result.history) == tiny_config.gpgnet_epochs
    assert np.isfinite(result.history[0].loss)
    assert (run_dir / GPGNET_CHECKPOINT).exists()
    assert (run_dir / GPGNET_CONFIG).exists()
    assert (run_dir / PREVIEW_DIR / "000000_attention.png").exists()

    model, loaded_vocab = load_gpgnet(blob_manager, run_dir)
    assert loaded_vocab.id_to_token == vocab.id_to_token
    sequence = train_sequences[0]
    expected = predict_attention(result.model, sequence, vocab, [0, 1])
    assert np.allclose(predict_attention(model, sequence, loaded_vocab, [0, 1]), expected)

    report = evaluate_attention(model, train_sequences, loaded_vocab)
    assert 0.0 <= report.mean_iou <= 1.0
    assert report.frames == sum(len(s.visible_frames()) for s in train_sequences)


def test_training_is_deterministic_for_a_seed(tiny_config, blob_manager, vocab, train_sequences):
    a = GpgnetTrainer(tiny_config, blob_manager).train(train_sequences, vocab)
    b = GpgnetTrainer(tiny_config, blob_manager).train(train_sequences, vocab)
    assert [r.loss for r in a.history] == [r.loss for r in b.history]
