"""Binary file formats for hyperspectral cubes and label grids.

HSC (cube): magic ``HSC1``, little-endian u32 M (width), u32 N (height),
u32 D (bands), then N*M*D f32 values in (row, column, band) order with the
band axis fastest.

HSG (labels): magic ``HSG1``, little-endian u32 M, u32 N, then N*M u16
class ids in row-major order; 0 marks unlabeled background.

Readers return arrays shaped (N, M, D) and (N, M), i.e. row-major grids;
the header stores width before height. Both formats are fixed external
interfaces shared with the dataset converter, so reader errors distinguish
bad magic, implausible dimensions, and length mismatches.
"""

import struct

import numpy as np

from .errors import DimensionError, MagicError, ShapeError, TruncatedError

HSC_MAGIC = b"HSC1"
HSG_MAGIC = b"HSG1"

# A corrupt header can request an absurd allocation; cap total elements
# well above any real scene (IP/UP/SA are all under 3e7).
_MAX_ELEMENTS = 2 ** 32


def _read_header(data, magic, n_dims, what):
    if len(data) < len(magic):
        raise TruncatedError(f"{what}: file shorter than its magic")
    if data[:4] != magic:
        raise MagicError(f"{what}: bad magic {bytes(data[:4])!r}, expected {magic!r}")
    header_len = 4 + 4 * n_dims
    if len(data) < header_len:
        raise TruncatedError(f"{what}: header needs {header_len} bytes, file holds {len(data)}")
    dims = struct.unpack_from(f"<{n_dims}I", data, 4)
    if any(d == 0 for d in dims):
        raise DimensionError(f"{what}: zero dimension in header {dims}")
    count = 1
    for d in dims:
        count *= d
    if count > _MAX_ELEMENTS:
        raise DimensionError(f"{what}: implausible dimensions {dims}")
    return dims, header_len, count


def _read_payload(data, offset, count, dtype, what):
    need = count * np.dtype(dtype).itemsize
    have = len(data) - offset
    if have < need:
        raise TruncatedError(f"{what}: payload needs {need} bytes, file holds {have}")
    if have > need:
        raise TruncatedError(f"{what}: {have - need} unexpected trailing bytes")
    return np.frombuffer(data, dtype=dtype, count=count, offset=offset)


def read_hsc(path):
    """Read a cube file; returns f32 values shaped (N, M, D)."""
    with open(path, "rb") as fh:
        data = fh.read()
    what = f"cube file {path}"
    (m, n, d), offset, count = _read_header(data, HSC_MAGIC, 3, what)
    flat = _read_payload(data, offset, count, "<f4", what)
    return flat.reshape(n, m, d).astype(np.float32)


def write_hsc(path, values):
    """Write (N, M, D) values as an HSC file, casting to f32."""
    arr = np.asarray(values)
    if arr.ndim != 3:
        raise ShapeError(f"cube values must be 3D (rows, cols, bands), got {arr.shape}")
    n, m, d = arr.shape
    with open(path, "wb") as fh:
        fh.write(HSC_MAGIC)
        fh.write(struct.pack("<III", m, n, d))
        fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def read_hsg(path):
    """Read a label file; returns u16 class ids shaped (N, M)."""
    with open(path, "rb") as fh:
        data = fh.read()
    what = f"label file {path}"
    (m, n), offset, count = _read_header(data, HSG_MAGIC, 2, what)
    flat = _read_payload(data, offset, count, "<u2", what)
    return flat.reshape(n, m).astype(np.uint16)


def write_hsg(path, labels):
    """Write an (N, M) grid of class ids as an HSG file."""
    arr = np.asarray(labels)
    if arr.ndim != 2:
        raise ShapeError(f"label grid must be 2D (rows, cols), got {arr.shape}")
    if arr.min(initial=0) < 0 or arr.max(initial=0) > np.iinfo(np.uint16).max:
        raise ShapeError("label ids must fit in an unsigned 16-bit integer")
    n, m = arr.shape
    with open(path, "wb") as fh:
        fh.write(HSG_MAGIC)
        fh.write(struct.pack("<II", m, n))
        fh.write(np.ascontiguousarray(arr, dtype="<u2").tobytes())
