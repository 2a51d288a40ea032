"""Data preparation: cube loading, PCA spectral reduction, labeled patch
extraction, and stratified train/test splitting.

The flow mirrors how the classifier consumes a scene: the raw cube
(N, M, D) is reduced to B spectral bands by PCA over all M*N pixels, then
every labeled pixel becomes the center of an S x S x B patch whose target
is that pixel's class, and the patches are split per class into train and
test partitions.

Coordinate conventions: arrays are (row, col) = (N, M); a patch origin is
stored as (alpha, beta) = (col, row) of its center pixel. Label id 0 is
unlabeled background everywhere; patch labels are re-indexed to 0-based
class indices (cube id 1 becomes class 0).
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import (
    DataError,
    DimensionError,
    NumericError,
    ParameterError,
    ShapeError,
)
from .formats import read_hsc, read_hsg

PAD_VALID = "valid"
PAD_ZERO = "zero"

# Published scene geometries, (rows, cols, bands, classes); handy for
# sanity-checking converted files and for picking per-scene defaults.
KNOWN_SCENES = {
    "indian_pines": (145, 145, 200, 16),
    "pavia_university": (610, 340, 103, 9),
    "salinas": (512, 217, 204, 16),
}


@dataclass
class DataCube:
    """Raw scene: values (N, M, D) f32 and labels (N, M) with 0 = background."""

    width: int
    height: int
    depth: int
    values: np.ndarray
    labels: np.ndarray

    @property
    def n_classes(self):
        return int(self.labels.max())


@dataclass
class ReducedCube:
    """PCA-projected scene plus the transform that produced it.

    components is (B, D) with orthonormal rows ordered by descending
    eigenvalue; mean is the per-band average removed before projection.
    """

    width: int
    height: int
    bands: int
    values: np.ndarray
    mean: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray


@dataclass
class PatchSet:
    """Labeled patches: (n, S, S, B, 1) f32 windows, 0-based labels, and
    (alpha, beta) = (col, row) center origins."""

    patches: np.ndarray
    labels: np.ndarray
    origins: np.ndarray
    window: int

    def __len__(self):
        return self.patches.shape[0]

    @property
    def bands(self):
        return self.patches.shape[3]

    def subset(self, indices):
        idx = np.asarray(indices)
        return PatchSet(self.patches[idx], self.labels[idx], self.origins[idx],
                        self.window)


def load_cube(cube_path, labels_path):
    """Read an HSC cube and its HSG label grid into a DataCube."""
    values = read_hsc(cube_path)
    labels = read_hsg(labels_path)
    n, m, d = values.shape
    if labels.shape != (n, m):
        raise DimensionError(
            f"label grid {labels.shape} does not match cube spatial dims {(n, m)}")
    if not np.all(np.isfinite(values)):
        raise DataError(f"cube {cube_path} contains non-finite values")
    return DataCube(width=m, height=n, depth=d, values=values, labels=labels)


def pca_reduce(cube, bands, whiten=True):
    """Project the cube's spectra onto their top principal components.

    Every pixel is a D-dimensional sample; the per-band mean is removed,
    the D x D covariance is eigendecomposed with a symmetric solver, and
    each pixel is projected onto the `bands` leading eigenvectors. With
    whiten on, each projected coordinate is divided by the square root of
    its eigenvalue (clamped at 1e-12) so nondegenerate output bands have
    unit variance. Each component's sign is fixed by forcing its
    largest-magnitude entry positive, which makes the output deterministic.
    """
    values = cube.values
    n_pix = cube.height * cube.width
    if not 1 <= bands <= cube.depth:
        raise ParameterError(
            f"bands must be in [1, {cube.depth}], got {bands}")
    if n_pix < 2:
        raise DataError("PCA needs at least two pixels")
    if not np.all(np.isfinite(values)):
        raise NumericError("PCA input contains non-finite values")
    x = values.reshape(n_pix, cube.depth).astype(np.float64)
    mean = x.mean(axis=0)
    xc = x - mean
    cov = (xc.T @ xc) / (n_pix - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)       # ascending
    order = np.arange(cube.depth - 1, cube.depth - 1 - bands, -1)
    eigvals = eigvals[order]
    components = eigvecs[:, order].T             # (B, D)
    flips = components[np.arange(bands), np.abs(components).argmax(axis=1)] < 0
    components[flips] *= -1.0
    projected = xc @ components.T
    if whiten:
        projected /= np.sqrt(np.maximum(eigvals, 1e-12))
    return ReducedCube(
        width=cube.width, height=cube.height, bands=bands,
        values=projected.reshape(cube.height, cube.width, bands).astype(np.float32),
        mean=mean, components=components, eigenvalues=eigvals)


def _gather_patches(values, labels, window, rows, cols, offset):
    """Copy S x S windows centered on (rows, cols) out of `values`.

    `offset` maps a center coordinate to its window's start index in
    `values` (0 for a padded array, -(S-1)/2 shifted for valid mode).
    """
    s = window
    b = values.shape[2]
    win = sliding_window_view(values, (s, s), axis=(0, 1))  # (Nw, Mw, B, S, S)
    n = rows.size
    out = np.empty((n, s, s, b, 1), dtype=np.float32)
    # Chunked gather: each fancy-index materializes (chunk, B, S, S).
    chunk = max(1, (64 * 1024 * 1024) // max(1, b * s * s * 4))
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        block = win[rows[lo:hi] + offset, cols[lo:hi] + offset]
        out[lo:hi, :, :, :, 0] = block.transpose(0, 2, 3, 1)
    lab = labels[rows, cols].astype(np.int64) - 1
    origins = np.stack([cols.astype(np.int64), rows.astype(np.int64)], axis=1)
    return PatchSet(patches=out, labels=lab, origins=origins, window=s)


def extract_patches(reduced, labels, window, padding=PAD_ZERO):
    """Cut an S x S x B patch around every labeled pixel.

    Valid mode restricts centers to the interior, giving
    (M-S+1) x (N-S+1) candidate positions; zero-pad mode pads the cube
    spatially by (S-1)/2 zeros per side so every pixel is a candidate.
    Only centers whose label is nonzero are emitted, in row-major center
    order, and labels are re-indexed 0-based.
    """
    if window < 1 or window % 2 == 0:
        raise ParameterError(f"window must be an odd positive integer, got {window}")
    if padding not in (PAD_VALID, PAD_ZERO):
        raise ParameterError(f"padding must be '{PAD_VALID}' or '{PAD_ZERO}', got {padding!r}")
    values = reduced.values
    n, m, b = values.shape
    if labels.shape != (n, m):
        raise ShapeError(f"label grid {labels.shape} does not match cube {(n, m)}")
    half = (window - 1) // 2
    if padding == PAD_VALID:
        if window > min(m, n):
            raise ShapeError(f"window {window} exceeds cube extent {(n, m)} in valid mode")
        mask = np.zeros((n, m), dtype=bool)
        mask[half:n - half, half:m - half] = True
        mask &= labels != 0
        rows, cols = np.nonzero(mask)
        return _gather_patches(values, labels, window, rows, cols, -half)
    padded = np.zeros((n + 2 * half, m + 2 * half, b), dtype=values.dtype)
    padded[half:half + n, half:half + m] = values
    rows, cols = np.nonzero(labels != 0)
    return _gather_patches(padded, labels, window, rows, cols, 0)


def candidate_positions(height, width, window):
    """Number of valid-mode center positions: (M-S+1) * (N-S+1)."""
    if window > min(height, width):
        return 0
    return (width - window + 1) * (height - window + 1)


def stratified_indices(labels, fraction, rng, min_one=True):
    """Split indices per class: round(fraction * count) to the first side.

    Rounding is half-up; with min_one, every nonempty class contributes at
    least one sample to the first side. Returns sorted index arrays
    (selected, remainder) that partition range(len(labels)).
    """
    rng = np.random.default_rng(rng)
    first, rest = [], []
    for cls in np.unique(labels):
        idx = np.nonzero(labels == cls)[0]
        k = math.floor(fraction * idx.size + 0.5)
        if min_one:
            k = max(1, k)
        k = min(k, idx.size)
        perm = rng.permutation(idx)
        first.append(perm[:k])
        rest.append(perm[k:])
    first = np.sort(np.concatenate(first))
    rest = np.sort(np.concatenate(rest))
    return first, rest


def split_stratified(patchset, train_fraction, seed):
    """Partition a PatchSet into train and test, stratified per class."""
    if not 0.0 < train_fraction < 1.0:
        raise ParameterError(f"train_fraction must be in (0, 1), got {train_fraction}")
    if len(patchset) == 0:
        raise DataError("cannot split an empty patch set")
    train_idx, test_idx = stratified_indices(patchset.labels, train_fraction, seed)
    return patchset.subset(train_idx), patchset.subset(test_idx)
