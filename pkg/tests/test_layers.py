"""Layer-level contracts: forward equivalence with naive loops, backward
gradients against finite differences, dropout semantics, and the loss."""

import numpy as np
import pytest

from hsinet import layers
from hsinet.errors import LabelError, NumericError, ParameterError, ShapeError

import oracles


def _conv3d_case(seed, shape=(5, 6, 7, 2), kernel=(3, 3, 3, 3, 2), relu=True,
                 margin=5e-4):
    """Random f64 conv3d instance whose pre-activations avoid ReLU kinks."""
    for s in range(seed, seed + 100):
        rng = np.random.default_rng(s)
        x = rng.normal(size=shape)
        k = rng.normal(scale=0.4, size=kernel)
        b = rng.normal(scale=0.2, size=kernel[0])
        pre = oracles.conv3d_naive(x, k, b)
        if not relu or np.abs(pre).min() > margin:
            act = layers.RELU if relu else layers.IDENTITY
            return x, layers.Conv3DLayer(k, b, act)
    raise AssertionError("no kink-safe conv3d case found")


def _conv2d_case(seed, shape=(6, 7, 3), kernel=(4, 3, 3, 3), relu=True,
                 margin=5e-4):
    for s in range(seed, seed + 100):
        rng = np.random.default_rng(s)
        x = rng.normal(size=shape)
        k = rng.normal(scale=0.4, size=kernel)
        b = rng.normal(scale=0.2, size=kernel[0])
        pre = oracles.conv2d_naive(x, k, b)
        if not relu or np.abs(pre).min() > margin:
            act = layers.RELU if relu else layers.IDENTITY
            return x, layers.Conv2DLayer(k, b, act)
    raise AssertionError("no kink-safe conv2d case found")


def _dense_case(seed, n_in=7, n_out=5, relu=True, margin=5e-4):
    for s in range(seed, seed + 100):
        rng = np.random.default_rng(s)
        x = rng.normal(size=n_in)
        w = rng.normal(scale=0.5, size=(n_out, n_in))
        b = rng.normal(scale=0.2, size=n_out)
        pre = w @ x + b
        if not relu or np.abs(pre).min() > margin:
            act = layers.RELU if relu else layers.IDENTITY
            return x, layers.DenseLayer(w, b, act)
    raise AssertionError("no kink-safe dense case found")


# ---------------------------------------------------------------- forward

@pytest.mark.parametrize("seed", [0, 1, 2])
def test_conv3d_forward_matches_naive_loops(seed):
    x, layer = _conv3d_case(seed, relu=True)
    out = layers.conv3d_forward(x, layer)
    ref = oracles.conv3d_naive(x, layer.kernels, layer.bias, relu=True)
    np.testing.assert_allclose(out, ref, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("seed", [3, 4, 5])
def test_conv2d_forward_matches_naive_loops(seed):
    x, layer = _conv2d_case(seed, relu=True)
    out = layers.conv2d_forward(x, layer)
    ref = oracles.conv2d_naive(x, layer.kernels, layer.bias, relu=True)
    np.testing.assert_allclose(out, ref, rtol=1e-10, atol=1e-12)


def test_conv_shape_law():
    # out = in - kernel + 1 on every convolved axis
    x, layer = _conv3d_case(0, shape=(9, 8, 10, 2), kernel=(4, 3, 5, 7, 2), relu=False)
    assert layers.conv3d_forward(x, layer).shape == (7, 4, 4, 4)
    x2, layer2 = _conv2d_case(0, shape=(9, 8, 3), kernel=(6, 5, 1, 3), relu=False)
    assert layers.conv2d_forward(x2, layer2).shape == (5, 8, 6)


def test_conv3d_batched_matches_per_sample():
    rng = np.random.default_rng(8)
    xb = rng.normal(size=(3, 5, 5, 8, 2)).astype(np.float32)
    k = rng.normal(scale=0.4, size=(4, 3, 3, 3, 2)).astype(np.float32)
    b = rng.normal(scale=0.2, size=4).astype(np.float32)
    layer = layers.Conv3DLayer(k, b)
    batched = layers.conv3d_forward(xb, layer)
    for i in range(3):
        np.testing.assert_allclose(batched[i], layers.conv3d_forward(xb[i], layer),
                                   rtol=1e-5, atol=1e-6)


def test_conv_linearity_with_identity_activation():
    rng = np.random.default_rng(12)
    k = rng.normal(size=(3, 3, 3, 3, 2))
    layer = layers.Conv3DLayer(k, np.zeros(3), layers.IDENTITY)
    x = rng.normal(size=(5, 5, 5, 2))
    y = rng.normal(size=(5, 5, 5, 2))
    fx = layers.conv3d_forward(x, layer)
    fy = layers.conv3d_forward(y, layer)
    np.testing.assert_allclose(layers.conv3d_forward(2.5 * x, layer), 2.5 * fx,
                               rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(layers.conv3d_forward(x + y, layer), fx + fy,
                               rtol=1e-10, atol=1e-12)


def test_conv3d_rejects_even_kernels_and_channel_mismatch():
    with pytest.raises(ParameterError):
        layers.Conv3DLayer(np.zeros((2, 2, 3, 3, 1)), np.zeros(2))
    layer = layers.Conv3DLayer(np.zeros((2, 3, 3, 3, 4)), np.zeros(2))
    with pytest.raises(ShapeError):
        layers.conv3d_forward(np.zeros((5, 5, 5, 3)), layer)
    with pytest.raises(ShapeError):
        layers.conv3d_forward(np.zeros((2, 2, 2, 4)), layer)  # smaller than kernel


def test_conv_layer_bias_shape_checked():
    with pytest.raises(ShapeError):
        layers.Conv2DLayer(np.zeros((4, 3, 3, 2)), np.zeros(3))
    with pytest.raises(ShapeError):
        layers.DenseLayer(np.zeros((4, 7)), np.zeros(5))


# --------------------------------------------------------------- backward

def _check_backward(x, layer, forward, backward, tol=1e-6):
    rng = np.random.default_rng(99)
    out = forward(x, layer)
    r = rng.normal(size=out.shape)

    def loss():
        return float((forward(x, layer) * r).sum())

    grad_x, grad_w, grad_b = backward(x, layer, r, output=None)
    weights = layer.kernels if hasattr(layer, "kernels") else layer.weights
    for arr, analytic in ((x, grad_x), (weights, grad_w), (layer.bias, grad_b)):
        numeric = oracles.fd_gradient(loss, arr)
        assert oracles.max_rel_err(analytic, numeric) < tol


@pytest.mark.parametrize("relu", [False, True])
def test_conv3d_backward_finite_differences(relu):
    x, layer = _conv3d_case(20, shape=(4, 5, 6, 2), kernel=(2, 3, 3, 3, 2), relu=relu)
    _check_backward(x, layer, layers.conv3d_forward, layers.conv3d_backward)


@pytest.mark.parametrize("relu", [False, True])
def test_conv2d_backward_finite_differences(relu):
    x, layer = _conv2d_case(30, shape=(5, 6, 3), kernel=(3, 3, 3, 3), relu=relu)
    _check_backward(x, layer, layers.conv2d_forward, layers.conv2d_backward)


@pytest.mark.parametrize("relu", [False, True])
def test_dense_backward_finite_differences(relu):
    x, layer = _dense_case(40, relu=relu)
    _check_backward(x, layer, layers.dense_forward, layers.dense_backward)


def test_conv3d_batched_backward_sums_over_batch():
    rng = np.random.default_rng(17)
    xb = rng.normal(size=(3, 4, 4, 5, 2))
    k = rng.normal(scale=0.4, size=(2, 3, 3, 3, 2))
    layer = layers.Conv3DLayer(k, rng.normal(size=2), layers.IDENTITY)
    g = rng.normal(size=(3, 2, 2, 3, 2))
    gx, gw, gb = layers.conv3d_backward(xb, layer, g)
    gw_sum = np.zeros_like(gw)
    gb_sum = np.zeros_like(gb)
    for i in range(3):
        gxi, gwi, gbi = layers.conv3d_backward(xb[i], layer, g[i])
        np.testing.assert_allclose(gx[i], gxi, rtol=1e-10, atol=1e-12)
        gw_sum += gwi
        gb_sum += gbi
    np.testing.assert_allclose(gw, gw_sum, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(gb, gb_sum, rtol=1e-10, atol=1e-12)


def test_backward_rejects_wrong_grad_shape():
    x, layer = _conv2d_case(2, relu=False)
    with pytest.raises(ShapeError):
        layers.conv2d_backward(x, layer, np.zeros((1, 1, 99)))


# ---------------------------------------------------------------- dropout

def test_dropout_eval_is_identity():
    layer = layers.DropoutLayer(0.4, "eval")
    x = np.random.default_rng(0).normal(size=(5, 7)).astype(np.float32)
    out, mask = layers.dropout_apply(x, layer)
    assert out is x or np.array_equal(out, x)
    assert np.all(mask == 1.0)


def test_dropout_rate_zero_skips_rng():
    layer = layers.DropoutLayer(0.0, "train")
    rng = np.random.default_rng(5)
    before = rng.bit_generator.state
    x = np.ones((4, 4), dtype=np.float32)
    out, _ = layers.dropout_apply(x, layer, rng=rng)
    assert np.array_equal(out, x)
    assert rng.bit_generator.state == before


def test_dropout_train_scales_survivors():
    layer = layers.DropoutLayer(0.4, "train")
    rng = np.random.default_rng(123)
    x = np.ones((200, 200), dtype=np.float32)
    out, mask = layers.dropout_apply(x, layer, rng=rng)
    kept = out != 0
    # survivors are scaled by 1/keep, casualties are exactly zero
    np.testing.assert_allclose(out[kept], 1.0 / 0.6, rtol=1e-6)
    assert np.all(out[~kept] == 0.0)
    assert abs(kept.mean() - 0.6) < 0.02
    np.testing.assert_allclose(out, x * mask, rtol=1e-6)


def test_dropout_train_mode_requires_rng():
    layer = layers.DropoutLayer(0.5, "train")
    with pytest.raises(ParameterError):
        layers.dropout_apply(np.ones(3), layer)


def test_dropout_rejects_bad_rate():
    with pytest.raises(ParameterError):
        layers.DropoutLayer(1.0)
    with pytest.raises(ParameterError):
        layers.DropoutLayer(-0.1)


# ------------------------------------------------------------------- loss

def test_softmax_loss_uniform_sixteen_classes():
    loss, _ = layers.softmax_cross_entropy(np.zeros(16), 3)
    assert abs(loss - np.log(16.0)) < 1e-12


def test_softmax_loss_extreme_logits_stable():
    loss, grad = layers.softmax_cross_entropy(np.array([1000.0, -1000.0]), 0)
    assert loss < 1e-6
    assert np.all(np.isfinite(grad))


def test_softmax_grad_sums_to_zero():
    rng = np.random.default_rng(3)
    logits = rng.normal(size=(6, 9))
    labels = rng.integers(0, 9, size=6)
    _, grad = layers.softmax_cross_entropy(logits, labels)
    np.testing.assert_allclose(grad.sum(axis=1), 0.0, atol=1e-12)


def test_softmax_grad_matches_finite_differences():
    rng = np.random.default_rng(4)
    logits = rng.normal(size=7)
    label = 2
    _, grad = layers.softmax_cross_entropy(logits, label)

    def loss():
        value, _ = layers.softmax_cross_entropy(logits, label)
        return float(value)

    numeric = oracles.fd_gradient(loss, logits)
    assert np.abs(grad - numeric).max() < 1e-8


def test_softmax_rejects_bad_labels_and_nonfinite():
    with pytest.raises(LabelError):
        layers.softmax_cross_entropy(np.zeros(4), 4)
    with pytest.raises(LabelError):
        layers.softmax_cross_entropy(np.zeros((2, 4)), np.array([0, -1]))
    with pytest.raises(NumericError):
        layers.softmax_cross_entropy(np.array([np.nan, 0.0]), 0)
    with pytest.raises(ShapeError):
        layers.softmax_cross_entropy(np.zeros((2, 4)), np.array([0, 1, 0]))
