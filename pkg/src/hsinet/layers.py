"""Layer forward/backward passes: 3D and 2D convolution, dense, dropout, and
the softmax cross-entropy loss.

Conventions used throughout:

* Convolutions are "valid" (no padding) with stride 1, so every convolved
  axis shrinks by kernel-1.
* Single samples are (H, W, D, C) / (H, W, C) / (in,); a leading batch axis
  is accepted everywhere and preserved.
* Kernels are stored (out_channels, k_h, k_w, [k_d,] in_channels).
* The optimized convolution path lowers windows to a matrix product
  (im2col); its equivalence to the literal nested-loop definition is pinned
  by the test suite's independent oracle.
* Backward passes need the activation derivative. For ReLU the mask is
  recoverable from the layer output (out > 0 iff pre-activation > 0), so
  backward functions accept the cached output and recompute it only when the
  caller did not keep it.

All ops are pure given their inputs (plus an explicit RNG for dropout).
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import LabelError, NumericError, ParameterError, ShapeError

# Scratch budget for im2col buffers; batches are processed in slices so peak
# memory stays bounded regardless of batch size.
_CHUNK_BYTES = 128 * 1024 * 1024

IDENTITY = "identity"
RELU = "relu"
_ACTIVATIONS = (IDENTITY, RELU)


def apply_activation(z, activation):
    if activation == RELU:
        return np.maximum(z, z.dtype.type(0))
    if activation == IDENTITY:
        return z
    raise ParameterError(f"unknown activation {activation!r}")


def _grad_through_activation(grad_out, output, activation):
    if activation == RELU:
        return grad_out * (output > 0)
    return grad_out


def _check_activation(activation):
    if activation not in _ACTIVATIONS:
        raise ParameterError(f"activation must be one of {_ACTIVATIONS}, got {activation!r}")


@dataclass
class Conv3DLayer:
    """3D convolution: kernels (out_channels, k_h, k_w, k_d, in_channels)."""

    kernels: np.ndarray
    bias: np.ndarray
    activation: str = RELU

    def __post_init__(self):
        if self.kernels.ndim != 5:
            raise ShapeError(f"Conv3DLayer kernels must be 5D, got {self.kernels.shape}")
        co, kh, kw, kd, _ = self.kernels.shape
        for k in (kh, kw, kd):
            if k < 1 or k % 2 == 0:
                raise ParameterError(f"kernel extents must be odd positive, got {kh}x{kw}x{kd}")
        if self.bias.shape != (co,):
            raise ShapeError(f"bias shape {self.bias.shape} does not match {co} output channels")
        _check_activation(self.activation)

    @property
    def out_channels(self):
        return self.kernels.shape[0]

    @property
    def in_channels(self):
        return self.kernels.shape[4]


@dataclass
class Conv2DLayer:
    """2D convolution: kernels (out_channels, k_h, k_w, in_channels)."""

    kernels: np.ndarray
    bias: np.ndarray
    activation: str = RELU

    def __post_init__(self):
        if self.kernels.ndim != 4:
            raise ShapeError(f"Conv2DLayer kernels must be 4D, got {self.kernels.shape}")
        co, kh, kw, _ = self.kernels.shape
        for k in (kh, kw):
            if k < 1 or k % 2 == 0:
                raise ParameterError(f"kernel extents must be odd positive, got {kh}x{kw}")
        if self.bias.shape != (co,):
            raise ShapeError(f"bias shape {self.bias.shape} does not match {co} output channels")
        _check_activation(self.activation)

    @property
    def out_channels(self):
        return self.kernels.shape[0]

    @property
    def in_channels(self):
        return self.kernels.shape[3]


@dataclass
class DenseLayer:
    """Fully connected layer: weights (out_units, in_units)."""

    weights: np.ndarray
    bias: np.ndarray
    activation: str = RELU

    def __post_init__(self):
        if self.weights.ndim != 2:
            raise ShapeError(f"DenseLayer weights must be 2D, got {self.weights.shape}")
        if self.bias.shape != (self.weights.shape[0],):
            raise ShapeError(f"bias shape {self.bias.shape} does not match weights {self.weights.shape}")
        _check_activation(self.activation)

    @property
    def out_units(self):
        return self.weights.shape[0]

    @property
    def in_units(self):
        return self.weights.shape[1]

    @property
    def param_count(self):
        return self.out_units * (self.in_units + 1)


@dataclass
class DropoutLayer:
    """Inverted dropout; eval mode is the identity map."""

    rate: float
    mode: str = "train"

    def __post_init__(self):
        if not 0.0 <= self.rate < 1.0:
            raise ParameterError(f"dropout rate must be in [0, 1), got {self.rate}")
        if self.mode not in ("train", "eval"):
            raise ParameterError(f"dropout mode must be 'train' or 'eval', got {self.mode!r}")


def _batch_rows(per_sample_bytes, n):
    rows = max(1, _CHUNK_BYTES // max(1, per_sample_bytes))
    return min(n, rows)


def _cols3d(x, kh, kw, kd):
    # (n, H, W, D, C) -> (n*Ho*Wo*Do, kh*kw*kd*C); window offsets ordered
    # (i, j, k, c) with channels fastest, matching kernels.reshape(co, -1).
    win = sliding_window_view(x, (kh, kw, kd), axis=(1, 2, 3))
    n, ho, wo, do = win.shape[:4]
    win = win.transpose(0, 1, 2, 3, 5, 6, 7, 4)
    return win.reshape(n * ho * wo * do, kh * kw * kd * x.shape[4])


def _cols2d(x, kh, kw):
    win = sliding_window_view(x, (kh, kw), axis=(1, 2))
    n, ho, wo = win.shape[:3]
    win = win.transpose(0, 1, 2, 4, 5, 3)
    return win.reshape(n * ho * wo, kh * kw * x.shape[3])


def _conv3d_shapes(x, layer):
    n, h, w, d, c = x.shape
    co, kh, kw, kd, ci = layer.kernels.shape
    if c != ci:
        raise ShapeError(f"conv3d: input has {c} channels, layer expects {ci}")
    if h < kh or w < kw or d < kd:
        raise ShapeError(f"conv3d: input {(h, w, d)} smaller than kernel {(kh, kw, kd)}")
    return (h - kh + 1, w - kw + 1, d - kd + 1, co)


def conv3d_forward(x, layer):
    """Valid 3D convolution plus activation.

    x: (H, W, D, C) or (n, H, W, D, C); returns the matching arity with
    spatial/spectral axes shrunk by kernel-1 and C replaced by out_channels.
    """
    single = x.ndim == 4
    xb = x[None] if single else x
    if xb.ndim != 5:
        raise ShapeError(f"conv3d: expected 4D or 5D input, got shape {x.shape}")
    ho, wo, do, co = _conv3d_shapes(xb, layer)
    n = xb.shape[0]
    co_, kh, kw, kd, ci = layer.kernels.shape
    dtype = np.result_type(xb, layer.kernels)
    wmat = layer.kernels.reshape(co, -1).T
    out = np.empty((n, ho, wo, do, co), dtype=dtype)
    step = _batch_rows(ho * wo * do * kh * kw * kd * ci * dtype.itemsize, n)
    for s in range(0, n, step):
        e = min(n, s + step)
        cols = _cols3d(xb[s:e], kh, kw, kd)
        out[s:e] = (cols @ wmat + layer.bias).reshape(e - s, ho, wo, do, co)
    out = apply_activation(out, layer.activation)
    return out[0] if single else out


def conv3d_backward(x, layer, grad_out, output=None):
    """Gradients of a scalar loss through conv3d_forward.

    Returns (grad_input, grad_kernels, grad_bias); for batched input the
    parameter gradients are summed over the batch. `output` is the cached
    forward result; it is recomputed when omitted and the activation needs it.
    """
    single = x.ndim == 4
    xb = x[None] if single else x
    gb = grad_out[None] if single else grad_out
    expected = (xb.shape[0],) + _conv3d_shapes(xb, layer)
    if gb.shape != expected:
        raise ShapeError(f"conv3d backward: grad_out shape {grad_out.shape}, expected {expected}")
    if layer.activation != IDENTITY:
        if output is None:
            output = conv3d_forward(x, layer)
        ob = output[None] if single else output
        gb = _grad_through_activation(gb, ob, layer.activation)

    n, ho, wo, do, co = gb.shape
    _, kh, kw, kd, ci = layer.kernels.shape
    dtype = np.result_type(xb, layer.kernels)
    wmat = layer.kernels.reshape(co, -1)          # (co, kvol*ci)
    grad_bias = gb.sum(axis=(0, 1, 2, 3))
    grad_wmat = np.zeros((kh * kw * kd * ci, co), dtype=dtype)
    grad_x = np.zeros_like(xb, dtype=dtype)
    step = _batch_rows(ho * wo * do * kh * kw * kd * ci * dtype.itemsize, n)
    for s in range(0, n, step):
        e = min(n, s + step)
        rows = (e - s) * ho * wo * do
        gmat = gb[s:e].reshape(rows, co)
        cols = _cols3d(xb[s:e], kh, kw, kd)
        grad_wmat += cols.T @ gmat
        gcols = (gmat @ wmat).reshape(e - s, ho, wo, do, kh, kw, kd, ci)
        for i in range(kh):
            for j in range(kw):
                for k in range(kd):
                    grad_x[s:e, i:i + ho, j:j + wo, k:k + do, :] += gcols[:, :, :, :, i, j, k, :]
    grad_kernels = grad_wmat.T.reshape(layer.kernels.shape)
    if single:
        grad_x = grad_x[0]
    return grad_x, grad_kernels, grad_bias


def _conv2d_shapes(x, layer):
    n, h, w, c = x.shape
    co, kh, kw, ci = layer.kernels.shape
    if c != ci:
        raise ShapeError(f"conv2d: input has {c} channels, layer expects {ci}")
    if h < kh or w < kw:
        raise ShapeError(f"conv2d: input {(h, w)} smaller than kernel {(kh, kw)}")
    return (h - kh + 1, w - kw + 1, co)


def conv2d_forward(x, layer):
    """Valid 2D convolution plus activation; x is (H, W, C) or (n, H, W, C)."""
    single = x.ndim == 3
    xb = x[None] if single else x
    if xb.ndim != 4:
        raise ShapeError(f"conv2d: expected 3D or 4D input, got shape {x.shape}")
    ho, wo, co = _conv2d_shapes(xb, layer)
    n = xb.shape[0]
    _, kh, kw, ci = layer.kernels.shape
    dtype = np.result_type(xb, layer.kernels)
    wmat = layer.kernels.reshape(co, -1).T
    out = np.empty((n, ho, wo, co), dtype=dtype)
    step = _batch_rows(ho * wo * kh * kw * ci * dtype.itemsize, n)
    for s in range(0, n, step):
        e = min(n, s + step)
        cols = _cols2d(xb[s:e], kh, kw)
        out[s:e] = (cols @ wmat + layer.bias).reshape(e - s, ho, wo, co)
    out = apply_activation(out, layer.activation)
    return out[0] if single else out


def conv2d_backward(x, layer, grad_out, output=None):
    """Gradients through conv2d_forward; mirrors conv3d_backward."""
    single = x.ndim == 3
    xb = x[None] if single else x
    gb = grad_out[None] if single else grad_out
    expected = (xb.shape[0],) + _conv2d_shapes(xb, layer)
    if gb.shape != expected:
        raise ShapeError(f"conv2d backward: grad_out shape {grad_out.shape}, expected {expected}")
    if layer.activation != IDENTITY:
        if output is None:
            output = conv2d_forward(x, layer)
        ob = output[None] if single else output
        gb = _grad_through_activation(gb, ob, layer.activation)

    n, ho, wo, co = gb.shape
    _, kh, kw, ci = layer.kernels.shape
    dtype = np.result_type(xb, layer.kernels)
    wmat = layer.kernels.reshape(co, -1)
    grad_bias = gb.sum(axis=(0, 1, 2))
    grad_wmat = np.zeros((kh * kw * ci, co), dtype=dtype)
    grad_x = np.zeros_like(xb, dtype=dtype)
    step = _batch_rows(ho * wo * kh * kw * ci * dtype.itemsize, n)
    for s in range(0, n, step):
        e = min(n, s + step)
        rows = (e - s) * ho * wo
        gmat = gb[s:e].reshape(rows, co)
        cols = _cols2d(xb[s:e], kh, kw)
        grad_wmat += cols.T @ gmat
        gcols = (gmat @ wmat).reshape(e - s, ho, wo, kh, kw, ci)
        for i in range(kh):
            for j in range(kw):
                grad_x[s:e, i:i + ho, j:j + wo, :] += gcols[:, :, :, i, j, :]
    grad_kernels = grad_wmat.T.reshape(layer.kernels.shape)
    if single:
        grad_x = grad_x[0]
    return grad_x, grad_kernels, grad_bias


def dense_forward(x, layer):
    """out = activation(W x + b); x is (in,) or (n, in)."""
    single = x.ndim == 1
    xb = x[None] if single else x
    if xb.ndim != 2 or xb.shape[1] != layer.in_units:
        raise ShapeError(f"dense: input shape {x.shape}, layer expects {layer.in_units} units")
    out = apply_activation(xb @ layer.weights.T + layer.bias, layer.activation)
    return out[0] if single else out


def dense_backward(x, layer, grad_out, output=None):
    """Gradients through dense_forward: (grad_input, grad_weights, grad_bias)."""
    single = x.ndim == 1
    xb = x[None] if single else x
    gb = grad_out[None] if single else grad_out
    if xb.shape[1] != layer.in_units or gb.shape != (xb.shape[0], layer.out_units):
        raise ShapeError(
            f"dense backward: input {x.shape} with grad_out {grad_out.shape} does not "
            f"match layer ({layer.out_units}, {layer.in_units})")
    if layer.activation != IDENTITY:
        if output is None:
            output = dense_forward(x, layer)
        ob = output[None] if single else output
        gb = _grad_through_activation(gb, ob, layer.activation)
    grad_w = gb.T @ xb
    grad_b = gb.sum(axis=0)
    grad_x = gb @ layer.weights
    if single:
        grad_x = grad_x[0]
    return grad_x, grad_w, grad_b


def dropout_apply(x, layer, rng=None, mode=None):
    """Inverted dropout. Returns (output, mask); backward is grad * mask.

    Train mode keeps each element with probability 1-rate and scales it by
    1/(1-rate); eval mode returns the input untouched with an all-ones mask.
    """
    mode = layer.mode if mode is None else mode
    if mode == "eval" or layer.rate == 0.0:
        return x, np.ones_like(x)
    if mode != "train":
        raise ParameterError(f"dropout mode must be 'train' or 'eval', got {mode!r}")
    if rng is None:
        raise ParameterError("dropout in train mode needs an explicit rng")
    keep = 1.0 - layer.rate
    mask = (rng.random(x.shape) < keep).astype(x.dtype) / x.dtype.type(keep)
    return x * mask, mask


def softmax_cross_entropy(logits, labels):
    """Softmax cross-entropy loss and its gradient w.r.t. the logits.

    Accepts (C,) with an int label or (n, C) with (n,) labels. Uses
    max-subtraction so huge logits cannot overflow. Returns per-sample loss
    and grad = softmax(logits) - onehot(label), same arity as the input.
    """
    single = np.ndim(logits) == 1
    z = np.atleast_2d(np.asarray(logits))
    if not np.all(np.isfinite(z)):
        raise NumericError("softmax_cross_entropy: logits contain non-finite values")
    lab = np.atleast_1d(np.asarray(labels))
    n, c = z.shape
    if lab.shape != (n,):
        raise ShapeError(f"labels shape {lab.shape} does not match {n} logit rows")
    if lab.min(initial=0) < 0 or lab.max(initial=0) >= c:
        raise LabelError(f"labels must lie in [0, {c})")
    shifted = z - z.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - lse
    idx = np.arange(n)
    loss = -logp[idx, lab]
    grad = np.exp(logp)
    grad[idx, lab] -= 1.0
    if single:
        return loss[0], grad[0]
    return loss, grad
