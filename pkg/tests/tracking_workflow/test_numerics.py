import numpy as np
import pytest

from app.core.exception import NumericsError
from app.infrastructure.blob_manager import LocalBlobManager
from app.tracking_workflow.numerics import (
    Concat,
    Conv1d,
    Conv2d,
    Dropout,
    Embedding,
    Flatten,
    Linear,
    Optimizer,
    OptimizerKind,
    OptimizerState,
    ReLU,
    Sequential,
    Sigmoid,
    SoftmaxRows,
    UpsampleConv2d,
    check_network,
    load_checkpoint,
    optimizer_step,
    save_checkpoint,
    softmax_rows,
    stable_sigmoid,
)
from app.tracking_workflow.numerics.checkpoint import decode_checkpoint, manifest_path

TOLERANCE = 1e-5


@pytest.mark.parametrize(
    ("layers", "shape"),
    [
        (lambda rng: [Conv2d("c", 2, 3, 3, rng, stride=2, padding=1)], (2, 2, 6, 6)),
        (lambda rng: [Conv2d("c", 1, 2, 5, rng)], (1, 1, 7, 7)),
        (lambda rng: [Conv1d("c", 3, 2, 3, rng)], (2, 3, 7)),
        (lambda rng: [UpsampleConv2d("u", 2, 2, 3, rng)], (1, 2, 3, 3)),
        (lambda rng: [Linear("l", 5, 4, rng), ReLU("r")], (3, 5)),
        (lambda rng: [Linear("l", 4, 3, rng), Sigmoid("s")], (3, 4)),
        (lambda rng: [Linear("l", 4, 2, rng), SoftmaxRows("s")], (3, 4)),
        (lambda rng: [Flatten("f"), Dropout("d", 0.5), Linear("l", 12, 2, rng)], (2, 3, 2, 2)),
    ],
    ids=["conv2d_stride2", "conv2d_same", "conv1d", "upsample", "linear_relu", "sigmoid", "softmax", "flatten"],
)
def test_layer_gradients_match_finite_differences(rng, layers, shape):
    net = Sequential("net", layers(rng))
    assert check_network(net, rng.standard_normal(shape), rng=rng) < TOLERANCE


def test_embedding_gradient_and_padding_row(rng):
    net = Sequential("net", [Embedding("e", 10, 3, rng)])
    ids = np.array([[1, 4, 0, 0], [2, 2, 9, 0]])
    assert check_network(net, ids, rng=rng, include_input=False) < TOLERANCE
    net.zero_grad()
    net.forward(ids)
    net.backward(np.ones((2, 4, 3)))
    assert np.all(net["e"].grads["W"][0] == 0.0)
    assert np.all(net["e"].params["W"][0] == 0.0)


def test_conv_output_shapes(rng):
    x = rng.standard_normal((2, 3, 8, 8))
    assert Conv2d("c", 3, 4, 3, rng, stride=2, padding=1).forward(x).shape == (2, 4, 4, 4)
    assert Conv2d("c", 3, 4, 3, rng).forward(x).shape == (2, 4, 8, 8)
    assert UpsampleConv2d("u", 3, 1, 3, rng).forward(x).shape == (2, 1, 16, 16)


def test_shape_mismatch_raises_numerics_error(rng):
    net = Sequential("net", [Linear("l", 5, 2, rng)])
    with pytest.raises(NumericsError):
        net.forward(rng.standard_normal((3, 4)))


def test_backward_before_forward_is_rejected(rng):
    net = Sequential("net", [Linear("l", 2, 2, rng)])
    with pytest.raises(NumericsError):
        net.backward(np.ones((1, 2)))


def test_duplicate_layer_names_rejected(rng):
    with pytest.raises(NumericsError):
        Sequential("net", [Linear("l", 2, 2, rng), Linear("l", 2, 2, rng)])


def test_dropout_is_identity_at_inference_and_deterministic_in_training(rng):
    layer = Dropout("d", 0.5)
    x = rng.standard_normal((4, 6))
    assert np.array_equal(layer.forward(x), x)
    a = layer.forward(x, training=True, rng=np.random.default_rng(3))
    b = layer.forward(x, training=True, rng=np.random.default_rng(3))
    assert np.array_equal(a, b)
    with pytest.raises(NumericsError):
        layer.forward(x, training=True)


def test_concat_splits_gradient_back(rng):
    layer = Concat("cat")
    a, b = rng.standard_normal((2, 3, 4)), rng.standard_normal((2, 5, 4))
    out = layer.forward([a, b])
    assert out.shape == (2, 8, 4)
    da, db = layer.backward(np.arange(out.size, dtype=float).reshape(out.shape))
    assert da.shape == a.shape and db.shape == b.shape


def test_stable_helpers_stay_finite():
    x = np.array([[-1000.0, 0.0, 1000.0]])
    assert np.all(np.isfinite(stable_sigmoid(x)))
    probs = softmax_rows(x)
    assert np.allclose(probs.sum(axis=-1), 1.0)


@pytest.mark.parametrize("kind", list(OptimizerKind))
def test_optimizer_updates_only_given_parameters(kind):
    params = {"a": np.ones(3), "b": np.ones(2)}
    optimizer = Optimizer(kind, 0.1)
    optimizer.step(params, {"a": np.array([1.0, -1.0, 0.0])})
    assert params["a"][0] < 1.0 < params["a"][1]
    assert params["a"][2] == 1.0
    assert np.array_equal(params["b"], np.ones(2))


def test_optimizer_refuses_non_finite_gradient():
    params = {"a": np.ones(2)}
    with pytest.raises(NumericsError):
        Optimizer(OptimizerKind.ADAM, 0.1).step(params, {"a": np.array([np.nan, 1.0])})
    assert np.array_equal(params["a"], np.ones(2))


def test_optimizer_rejects_non_positive_learning_rate():
    with pytest.raises(NumericsError):
        Optimizer(OptimizerKind.SGD, 0.0)


def test_sgd_single_step_arithmetic():
    params = {"w": np.array([0.0])}
    state = optimizer_step(params, {"w": np.array([1.0])}, OptimizerState(kind=OptimizerKind.SGD, lr=0.1))
    assert params["w"][0] == pytest.approx(-0.1)
    assert state.step == 1


@pytest.mark.parametrize("kind", list(OptimizerKind))
def test_zero_gradient_leaves_parameters_unchanged(kind):
    params = {"w": np.array([0.3, -0.7])}
    optimizer_step(params, {"w": np.zeros(2)}, OptimizerState(kind=kind, lr=0.1))
    assert np.array_equal(params["w"], np.array([0.3, -0.7]))


def test_adam_first_step_moves_by_learning_rate_against_gradient():
    params = {"w": np.array([1.0, 1.0])}
    state = OptimizerState(kind=OptimizerKind.ADAM, lr=0.01)
    optimizer_step(params, {"w": np.array([3.0, -0.2])}, state)
    assert params["w"] == pytest.approx([0.99, 1.01], abs=1e-6)
    assert state.param_steps["w"] == 1


def test_frozen_layer_exposes_no_gradients(rng):
    net = Sequential("net", [Linear("a", 3, 3, rng), Linear("b", 3, 1, rng)])
    net.freeze(["a"])
    assert set(net.gradients()) == {"b.W", "b.b"}
    assert set(net.parameters()) == {"a.W", "a.b", "b.W", "b.b"}


def test_checkpoint_restores_parameters(tmp_path, rng):
    blob_manager = LocalBlobManager()
    source = Sequential("net", [Conv2d("c", 1, 2, 3, rng), Flatten("f"), Linear("l", 32, 2, rng)])
    path = tmp_path / "model.ckpt"
    save_checkpoint(blob_manager, path, source, source.specs())

    target = Sequential("net", [Conv2d("c", 1, 2, 3, rng), Flatten("f"), Linear("l", 32, 2, rng)])
    load_checkpoint(blob_manager, path, target)
    for key, value in source.parameters().items():
        assert np.array_equal(target.parameters()[key], value)
    assert "c" in manifest_path(path).read_text(encoding="utf-8")


def test_checkpoint_rejects_shape_mismatch_and_bad_header(tmp_path, rng):
    blob_manager = LocalBlobManager()
    path = tmp_path / "model.ckpt"
    source = Sequential("net", [Linear("l", 4, 2, rng)])
    save_checkpoint(blob_manager, path, source, source.specs())
    with pytest.raises(NumericsError):
        load_checkpoint(blob_manager, path, Sequential("net", [Linear("l", 5, 2, rng)]))
    with pytest.raises(NumericsError):
        decode_checkpoint(b"garbage-bytes")
