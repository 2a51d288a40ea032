"""Tensor primitive contracts: allocation, reshape, indexing, dtype moves."""

import numpy as np
import pytest

from hsinet import tensor
from hsinet.errors import ParameterError, ShapeError


def test_new_tensor_is_filled_and_shaped():
    t = tensor.tensor_new((2, 3), fill=1.5)
    assert t.shape == (2, 3)
    assert t.dtype == np.float32
    assert np.all(t == 1.5)


def test_new_tensor_f64():
    t = tensor.tensor_new((4,), dtype="f64")
    assert t.dtype == np.float64
    assert np.all(t == 0.0)


@pytest.mark.parametrize("shape", [(0,), (2, 0), (-1, 3), (2.5,)])
def test_new_tensor_rejects_bad_dims(shape):
    with pytest.raises(ShapeError):
        tensor.tensor_new(shape)


def test_resolve_dtype_rejects_unknown():
    with pytest.raises(ParameterError):
        tensor.resolve_dtype("f16")


def test_reshape_preserves_buffer():
    t = np.arange(6, dtype=np.float32)
    r = tensor.tensor_reshape(t, (2, 3))
    assert r.shape == (2, 3)
    assert np.array_equal(r.ravel(), t)


def test_reshape_reference_shapes():
    # The two reshapes the architecture relies on.
    t = np.zeros((19, 19, 18, 32), dtype=np.float32)
    assert tensor.tensor_reshape(t, (19, 19, 576)).shape == (19, 19, 576)
    u = np.zeros((17, 17, 64), dtype=np.float32)
    assert tensor.tensor_reshape(u, (18496,)).shape == (18496,)


def test_reshape_round_trip_is_identity():
    t = np.arange(6, dtype=np.float64) + 0.25
    back = tensor.tensor_reshape(tensor.tensor_reshape(t, (2, 3)), (6,))
    assert np.array_equal(back, t)


def test_reshape_rejects_element_count_change():
    with pytest.raises(ShapeError):
        tensor.tensor_reshape(np.zeros(6, dtype=np.float32), (4, 2))


def test_row_major_strides():
    assert tensor.row_major_strides((4, 3, 2)) == (6, 2, 1)
    assert tensor.row_major_strides((5,)) == (1,)


def test_flat_index_enumerates_row_major():
    shape = (3, 4, 2)
    arr = np.arange(24).reshape(shape)
    for i in range(3):
        for j in range(4):
            for k in range(2):
                assert tensor.flat_index(shape, (i, j, k)) == arr[i, j, k]


def test_flat_index_bounds_checked():
    with pytest.raises(ShapeError):
        tensor.flat_index((2, 2), (2, 0))
    with pytest.raises(ShapeError):
        tensor.flat_index((2, 2), (0, 1, 0))


def test_f32_round_trip_exact_for_representable_values():
    values = np.array([0.5, -3.25, 1024.0, 2.0 ** -20], dtype=np.float32)
    up = tensor.to_f64(values)
    down = tensor.to_f32(up)
    assert down.dtype == np.float32
    assert np.array_equal(down, values)
