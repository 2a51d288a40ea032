"""Model assembly for the hybrid spectral-spatial classifier.

The architecture is fixed apart from the input geometry: three 3D
convolutions (8 kernels 3x3x7, then 16 kernels 3x3x5, then 32 kernels
3x3x3) whose output is reshaped so the remaining spectral steps fold into
channels, one 2D convolution (64 kernels 3x3), then dense layers of 256 and
128 units with dropout after each, and a final dense layer producing one
logit per class. Only the patch window S, the spectral depth B, the class
count C, the dropout rate, the init seed, and the dtype are configurable.

Two ablation variants are available: "3d" skips the 2D convolution and
flattens the third 3D output directly, and "2d" folds the spectral axis of
the input into channels and runs only the 2D convolution. The default
"hybrid" variant is the full chain.

Checkpoints are little-endian binary: magic "HSNM", u32 version, a config
block (S, B, C, variant, dtype, dropout rate, init seed), then each
parameter tensor in layer order prefixed by rank and dimensions.
"""

import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigError,
    DimensionError,
    FormatError,
    MagicError,
    ParameterError,
    ShapeError,
    StateError,
    TruncatedError,
    VersionError,
)
from .layers import (
    IDENTITY,
    RELU,
    Conv2DLayer,
    Conv3DLayer,
    DenseLayer,
    DropoutLayer,
    conv2d_backward,
    conv2d_forward,
    conv3d_backward,
    conv3d_forward,
    dense_backward,
    dense_forward,
    dropout_apply,
)
from .tensor import resolve_dtype

CHECKPOINT_MAGIC = b"HSNM"
CHECKPOINT_VERSION = 1

VARIANTS = ("hybrid", "3d", "2d")
_VARIANT_CODE = {"hybrid": 0, "3d": 1, "2d": 2}
_CODE_VARIANT = {code: name for name, code in _VARIANT_CODE.items()}
_DTYPE_CODE = {"f32": 0, "f64": 1}
_CODE_DTYPE = {code: name for name, code in _DTYPE_CODE.items()}

# Fixed layer constants: (out_channels, k_h, k_w, k_d) per 3D stage, then
# the single 2D stage and the two hidden dense widths.
_CONV3D_SPECS = ((8, 3, 3, 7), (16, 3, 3, 5), (32, 3, 3, 3))
_CONV2D_CHANNELS = 64
_CONV2D_EXTENT = 3
_DENSE_UNITS = (256, 128)


@dataclass
class ModelConfig:
    """Input geometry and the few knobs the architecture exposes.

    window: odd spatial patch side, at least 9 so the 2D stage output
        (S-8)x(S-8) is nonempty.
    bands: spectral depth after reduction, at least 13 so three 3D
        convolutions leave at least one spectral step.
    """

    window: int
    bands: int
    classes: int
    dropout_rate: float = 0.4
    variant: str = "hybrid"
    seed: int = 101
    dtype: str = "f32"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.window < 9 or self.window % 2 == 0:
            raise ConfigError(f"window must be an odd integer >= 9, got {self.window}")
        if self.bands < 13:
            raise ConfigError(f"bands must be >= 13, got {self.bands}")
        if self.classes < 2:
            raise ConfigError(f"classes must be >= 2, got {self.classes}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.dtype not in _DTYPE_CODE:
            raise ConfigError(f"dtype must be 'f32' or 'f64', got {self.dtype!r}")


def flatten_length(config):
    """Unit count entering the first dense layer."""
    s, b = config.window, config.bands
    if config.variant == "hybrid":
        return (s - 8) ** 2 * _CONV2D_CHANNELS
    if config.variant == "3d":
        return (s - 6) ** 2 * (b - 12) * _CONV3D_SPECS[-1][0]
    return (s - 2) ** 2 * _CONV2D_CHANNELS


def parameter_shapes(config):
    """(name, shape) for every parameter tensor, in serialization order."""
    shapes = []
    cin = 1
    if config.variant in ("hybrid", "3d"):
        for i, (co, kh, kw, kd) in enumerate(_CONV3D_SPECS, start=1):
            shapes.append((f"conv3d_{i}.kernels", (co, kh, kw, kd, cin)))
            shapes.append((f"conv3d_{i}.bias", (co,)))
            cin = co
    if config.variant == "hybrid":
        c2_in = _CONV3D_SPECS[-1][0] * (config.bands - 12)
    elif config.variant == "2d":
        c2_in = config.bands
    else:
        c2_in = None
    if c2_in is not None:
        k = _CONV2D_EXTENT
        shapes.append(("conv2d_1.kernels", (_CONV2D_CHANNELS, k, k, c2_in)))
        shapes.append(("conv2d_1.bias", (_CONV2D_CHANNELS,)))
    prev = flatten_length(config)
    names = [f"dense_{i}" for i in range(1, len(_DENSE_UNITS) + 2)]
    for name, units in zip(names, _DENSE_UNITS + (config.classes,)):
        shapes.append((f"{name}.weights", (units, prev)))
        shapes.append((f"{name}.bias", (units,)))
        prev = units
    return shapes


def model_param_count(config):
    """Total trainable parameter count for a config."""
    return sum(math.prod(shape) for _, shape in parameter_shapes(config))


def summary_rows(config):
    """Per-layer (name, output_shape, parameter_count) rows, input included."""
    s, b, c = config.window, config.bands, config.classes
    rows = [("input_1", (s, s, b, 1), 0)]
    if config.variant in ("hybrid", "3d"):
        h, d, cin = s, b, 1
        for i, (co, kh, kw, kd) in enumerate(_CONV3D_SPECS, start=1):
            h -= kh - 1
            d -= kd - 1
            rows.append((f"conv3d_{i}", (h, h, d, co), co * (kh * kw * kd * cin + 1)))
            cin = co
    if config.variant == "hybrid":
        ch = _CONV3D_SPECS[-1][0] * (b - 12)
        rows.append(("reshape_1", (s - 6, s - 6, ch), 0))
        rows.append(("conv2d_1", (s - 8, s - 8, _CONV2D_CHANNELS),
                     _CONV2D_CHANNELS * (_CONV2D_EXTENT ** 2 * ch + 1)))
    elif config.variant == "2d":
        rows.append(("reshape_1", (s, s, b), 0))
        rows.append(("conv2d_1", (s - 2, s - 2, _CONV2D_CHANNELS),
                     _CONV2D_CHANNELS * (_CONV2D_EXTENT ** 2 * b + 1)))
    prev = flatten_length(config)
    rows.append(("flatten_1", (prev,), 0))
    for i, units in enumerate(_DENSE_UNITS, start=1):
        rows.append((f"dense_{i}", (units,), units * (prev + 1)))
        rows.append((f"dropout_{i}", (units,), 0))
        prev = units
    rows.append((f"dense_{len(_DENSE_UNITS) + 1}", (c,), c * (prev + 1)))
    return rows


@dataclass
class _Step:
    kind: str     # conv3d | conv2d | dense | dropout | reshape | flatten
    name: str
    layer: object = None


class Model:
    """The layer chain plus cached activations for backprop.

    Training is single-owner: a train-mode forward stores the per-step
    inputs, outputs, and dropout masks that backward() consumes. Eval-mode
    forward touches neither the cache nor any RNG.
    """

    def __init__(self, config, steps):
        self.config = config
        self._steps = steps
        self._cache = None

    @property
    def input_shape(self):
        c = self.config
        return (c.window, c.window, c.bands, 1)

    def parameters(self):
        """(name, array) pairs in serialization order; arrays are live views."""
        out = []
        for step in self._steps:
            if step.kind in ("conv3d", "conv2d"):
                out.append((f"{step.name}.kernels", step.layer.kernels))
                out.append((f"{step.name}.bias", step.layer.bias))
            elif step.kind == "dense":
                out.append((f"{step.name}.weights", step.layer.weights))
                out.append((f"{step.name}.bias", step.layer.bias))
        return out

    def param_count(self):
        return sum(arr.size for _, arr in self.parameters())

    def forward(self, x, mode="eval", rng=None):
        """Run the chain on one patch (S,S,B,1) or a batch (n,S,S,B,1).

        Train mode applies dropout (drawing masks from rng) and caches every
        step for the following backward(). Returns logits (C,) or (n, C).
        """
        if mode not in ("train", "eval"):
            raise ParameterError(f"mode must be 'train' or 'eval', got {mode!r}")
        single = x.ndim == 4
        xb = x[None] if single else x
        if xb.ndim != 5 or xb.shape[1:] != self.input_shape:
            raise ShapeError(
                f"input shape {x.shape} does not match model input {self.input_shape}")
        cache = [] if mode == "train" else None
        h = xb
        for step in self._steps:
            mask = None
            if step.kind == "conv3d":
                out = conv3d_forward(h, step.layer)
            elif step.kind == "conv2d":
                out = conv2d_forward(h, step.layer)
            elif step.kind == "dense":
                out = dense_forward(h, step.layer)
            elif step.kind == "reshape":
                out = h.reshape(h.shape[0], h.shape[1], h.shape[2], -1)
            elif step.kind == "flatten":
                out = h.reshape(h.shape[0], -1)
            else:  # dropout
                if mode == "train":
                    out, mask = dropout_apply(h, step.layer, rng=rng, mode="train")
                else:
                    out = h
            if cache is not None:
                cache.append((h, out, mask))
            h = out
        if mode == "train":
            self._cache = cache
        return h[0] if single else h

    def backward(self, grad_logits):
        """Parameter gradients {name: array} from the cached train forward.

        Batched grad_logits yields batch-summed parameter gradients; divide
        the incoming gradient by the batch size first for a mean.
        """
        if self._cache is None:
            raise StateError("backward() requires a preceding train-mode forward")
        cache = self._cache
        logits = cache[-1][1]
        g = grad_logits[None] if grad_logits.ndim == 1 else grad_logits
        if g.shape != logits.shape:
            raise ShapeError(
                f"grad_logits shape {grad_logits.shape} does not match cached logits "
                f"{logits.shape}")
        grads = {}
        for step, (inp, out, mask) in zip(reversed(self._steps), reversed(cache)):
            if step.kind == "conv3d":
                g, gw, gb = conv3d_backward(inp, step.layer, g, output=out)
                grads[f"{step.name}.kernels"] = gw
                grads[f"{step.name}.bias"] = gb
            elif step.kind == "conv2d":
                g, gw, gb = conv2d_backward(inp, step.layer, g, output=out)
                grads[f"{step.name}.kernels"] = gw
                grads[f"{step.name}.bias"] = gb
            elif step.kind == "dense":
                g, gw, gb = dense_backward(inp, step.layer, g, output=out)
                grads[f"{step.name}.weights"] = gw
                grads[f"{step.name}.bias"] = gb
            elif step.kind in ("reshape", "flatten"):
                g = g.reshape(inp.shape)
            else:  # dropout
                if mask is not None:
                    g = g * mask
        return grads


def _glorot(rng, shape, fan_in, fan_out, dtype):
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def build_model(config):
    """Construct the layer chain with Glorot-uniform weights from config.seed.

    Weight tensors are drawn in serialization order from a single generator,
    as f64 then cast to the config dtype; biases start at zero.
    """
    dtype = resolve_dtype(config.dtype)
    rng = np.random.default_rng(config.seed)
    layers = {}
    for name, shape in parameter_shapes(config):
        base, kind = name.split(".")
        if kind == "bias":
            continue
        if base.startswith("conv"):
            co = shape[0]
            kvol = math.prod(shape[1:-1])
            weights = _glorot(rng, shape, kvol * shape[-1], kvol * co, dtype)
        else:
            weights = _glorot(rng, shape, shape[1], shape[0], dtype)
        bias = np.zeros(shape[0], dtype=dtype)
        if base.startswith("conv3d"):
            layers[base] = Conv3DLayer(weights, bias, RELU)
        elif base.startswith("conv2d"):
            layers[base] = Conv2DLayer(weights, bias, RELU)
        else:
            layers[base] = DenseLayer(weights, bias, RELU)

    last_dense = f"dense_{len(_DENSE_UNITS) + 1}"
    layers[last_dense].activation = IDENTITY

    steps = []
    if config.variant in ("hybrid", "3d"):
        for i in range(1, len(_CONV3D_SPECS) + 1):
            steps.append(_Step("conv3d", f"conv3d_{i}", layers[f"conv3d_{i}"]))
    if config.variant == "hybrid":
        steps.append(_Step("reshape", "reshape_1"))
        steps.append(_Step("conv2d", "conv2d_1", layers["conv2d_1"]))
    elif config.variant == "2d":
        steps.append(_Step("reshape", "reshape_1"))
        steps.append(_Step("conv2d", "conv2d_1", layers["conv2d_1"]))
    steps.append(_Step("flatten", "flatten_1"))
    for i in range(1, len(_DENSE_UNITS) + 1):
        steps.append(_Step("dense", f"dense_{i}", layers[f"dense_{i}"]))
        steps.append(_Step("dropout", f"dropout_{i}",
                           DropoutLayer(config.dropout_rate, "train")))
    steps.append(_Step("dense", last_dense, layers[last_dense]))
    return Model(config, steps)


def model_forward(model, patch, mode="eval", rng=None):
    return model.forward(patch, mode=mode, rng=rng)


def model_backward(model, grad_logits):
    return model.backward(grad_logits)


def model_save(model, path):
    """Write the checkpoint; see the module docstring for the layout."""
    cfg = model.config
    buf = bytearray()
    buf += CHECKPOINT_MAGIC
    buf += struct.pack("<I", CHECKPOINT_VERSION)
    buf += struct.pack("<III", cfg.window, cfg.bands, cfg.classes)
    buf += struct.pack("<BB", _VARIANT_CODE[cfg.variant], _DTYPE_CODE[cfg.dtype])
    buf += struct.pack("<d", cfg.dropout_rate)
    buf += struct.pack("<q", cfg.seed)
    params = model.parameters()
    buf += struct.pack("<I", len(params))
    for _, arr in params:
        buf += struct.pack("<I", arr.ndim)
        buf += struct.pack(f"<{arr.ndim}I", *arr.shape)
        buf += np.ascontiguousarray(arr).tobytes()
    with open(path, "wb") as fh:
        fh.write(bytes(buf))


class _Reader:
    def __init__(self, data, what):
        self.data = data
        self.off = 0
        self.what = what

    def take(self, n):
        if self.off + n > len(self.data):
            raise TruncatedError(
                f"{self.what}: needed {n} bytes at offset {self.off}, "
                f"file holds {len(self.data)}")
        chunk = self.data[self.off:self.off + n]
        self.off += n
        return chunk

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def model_load(path):
    """Read a checkpoint back into a Model; inverse of model_save."""
    with open(path, "rb") as fh:
        data = fh.read()
    r = _Reader(data, f"checkpoint {path}")
    magic = bytes(r.take(4))
    if magic != CHECKPOINT_MAGIC:
        raise MagicError(f"bad checkpoint magic {magic!r}, expected {CHECKPOINT_MAGIC!r}")
    (version,) = r.unpack("<I")
    if version != CHECKPOINT_VERSION:
        raise VersionError(f"checkpoint version {version}, supported {CHECKPOINT_VERSION}")
    window, bands, classes = r.unpack("<III")
    variant_code, dtype_code = r.unpack("<BB")
    (dropout_rate,) = r.unpack("<d")
    (seed,) = r.unpack("<q")
    if variant_code not in _CODE_VARIANT:
        raise FormatError(f"unknown variant code {variant_code}")
    if dtype_code not in _CODE_DTYPE:
        raise FormatError(f"unknown dtype code {dtype_code}")
    config = ModelConfig(
        window=window, bands=bands, classes=classes, dropout_rate=dropout_rate,
        variant=_CODE_VARIANT[variant_code], seed=seed, dtype=_CODE_DTYPE[dtype_code])
    expected = parameter_shapes(config)
    (n_tensors,) = r.unpack("<I")
    if n_tensors != len(expected):
        raise DimensionError(
            f"checkpoint holds {n_tensors} tensors, config needs {len(expected)}")
    dtype = resolve_dtype(config.dtype)
    loaded = []
    for name, shape in expected:
        (rank,) = r.unpack("<I")
        if rank != len(shape):
            raise DimensionError(f"{name}: rank {rank}, expected {len(shape)}")
        dims = r.unpack(f"<{rank}I")
        if dims != shape:
            raise DimensionError(f"{name}: dims {dims}, expected {shape}")
        payload = r.take(math.prod(dims) * dtype.itemsize)
        loaded.append(np.frombuffer(payload, dtype=dtype).reshape(dims))
    if r.off != len(data):
        raise TruncatedError(
            f"checkpoint {path}: {len(data) - r.off} unexpected trailing bytes")
    model = build_model(config)
    for (_, arr), values in zip(model.parameters(), loaded):
        arr[...] = values
    return model
