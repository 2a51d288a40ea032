"""Dense row-major float tensors.

Tensors are plain numpy arrays (C order, last axis fastest). f32 is the
production dtype; f64 exists for gradient verification. The helpers here pin
down the contracts the rest of the package relies on: strictly positive
dimensions, buffer-preserving reshape, and explicit flat indexing.
"""

import numpy as np

from .errors import ParameterError, ShapeError

F32 = np.float32
F64 = np.float64

_DTYPES = {"f32": np.dtype(F32), "f64": np.dtype(F64),
           F32: np.dtype(F32), F64: np.dtype(F64),
           np.dtype(F32): np.dtype(F32), np.dtype(F64): np.dtype(F64)}


def resolve_dtype(dtype):
    """Map 'f32'/'f64' (or the numpy equivalents) onto a numpy dtype."""
    try:
        return _DTYPES[dtype]
    except (KeyError, TypeError):
        raise ParameterError(f"unsupported dtype {dtype!r}; use 'f32' or 'f64'") from None


def tensor_new(shape, fill=0.0, dtype="f32"):
    """Allocate a tensor of the given shape with every element set to fill."""
    shape = tuple(shape)
    for d in shape:
        if not isinstance(d, (int, np.integer)) or d < 1:
            raise ShapeError(f"tensor_new: dimensions must be positive integers, got {shape}")
    return np.full(shape, fill, dtype=resolve_dtype(dtype))


def tensor_reshape(t, new_shape):
    """Reshape without touching the buffer; element counts must agree."""
    new_shape = tuple(int(d) for d in new_shape)
    if int(np.prod(new_shape, dtype=np.int64)) != t.size:
        raise ShapeError(
            f"tensor_reshape: cannot reshape {t.shape} ({t.size} elements) to "
            f"{new_shape} ({int(np.prod(new_shape, dtype=np.int64))} elements)")
    return t.reshape(new_shape)


def row_major_strides(shape):
    """Element strides for C order: stride_j = product of dims after j."""
    strides = []
    acc = 1
    for d in reversed(shape):
        strides.append(acc)
        acc *= d
    return tuple(reversed(strides))


def flat_index(shape, index):
    """Row-major flat offset of a multi-index, with bounds checking."""
    if len(index) != len(shape):
        raise ShapeError(f"flat_index: index {index} has wrong arity for shape {shape}")
    strides = row_major_strides(shape)
    flat = 0
    for i, (d, s) in zip(index, zip(shape, strides)):
        if not 0 <= i < d:
            raise ShapeError(f"flat_index: index {index} out of bounds for shape {shape}")
        flat += i * s
    return flat


def to_f64(t):
    return np.asarray(t, dtype=F64)


def to_f32(t):
    return np.asarray(t, dtype=F32)
