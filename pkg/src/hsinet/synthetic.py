"""Synthetic scenes and patch sets for tests and demos.

Real hyperspectral scenes are large downloads, so the test suite and the
demos run on generated stand-ins: each class gets a smooth random spectral
signature, pixels of that class are the signature plus i.i.d. noise, and a
border of unlabeled background exercises the 0-label handling. With
signatures well separated relative to the noise these sets are trivially
separable, which is exactly what capacity/overfit checks need.
"""

import numpy as np

from .errors import ParameterError
from .pipeline import DataCube, PatchSet


def _signatures(rng, classes, depth, spread=3.0):
    # Smooth curves: random walks low-pass filtered, then spaced apart by
    # class-specific offsets so classes stay separable after PCA.
    base = rng.normal(size=(classes, depth)).cumsum(axis=1)
    # convolve(..., "same") returns max(len(row), len(kernel)) values, so
    # the kernel must never be longer than the spectrum
    width = min(7, depth)
    kernel = np.ones(width) / width
    smooth = np.apply_along_axis(lambda r: np.convolve(r, kernel, mode="same"), 1, base)
    offsets = spread * np.arange(classes)[:, None]
    return smooth + offsets


def synthetic_scene(rows=48, cols=48, depth=24, classes=4, seed=7, noise=0.08,
                    background=2):
    """Build a DataCube with block-structured labels.

    Labels tile the interior into `classes` vertical strips; a band of
    `background` unlabeled pixels rings the scene. Values are f32.
    """
    if classes < 1:
        raise ParameterError(f"classes must be >= 1, got {classes}")
    if rows <= 2 * background or cols <= 2 * background:
        raise ParameterError("scene too small for the requested background border")
    rng = np.random.default_rng(seed)
    sigs = _signatures(rng, classes, depth)
    labels = np.zeros((rows, cols), dtype=np.uint16)
    interior = cols - 2 * background
    for c in range(classes):
        lo = background + (c * interior) // classes
        hi = background + ((c + 1) * interior) // classes
        labels[background:rows - background, lo:hi] = c + 1
    values = rng.normal(scale=noise, size=(rows, cols, depth))
    for c in range(classes):
        values[labels == c + 1] += sigs[c]
    return DataCube(width=cols, height=rows, depth=depth,
                    values=values.astype(np.float32), labels=labels)


def separable_patches(n, window=9, bands=13, classes=2, seed=11, noise=0.05,
                      spread=2.0):
    """Build a PatchSet of `n` trivially separable labeled patches.

    Patch i of class c is that class's signature broadcast over the window
    plus small noise; labels cycle through the classes so every class gets
    floor(n/classes) or one more. Origins are synthetic (index, 0) pairs.
    """
    if n < classes:
        raise ParameterError(f"need at least one patch per class, got n={n}")
    rng = np.random.default_rng(seed)
    sigs = _signatures(rng, classes, bands, spread=spread)
    labels = np.arange(n, dtype=np.int64) % classes
    patches = rng.normal(scale=noise, size=(n, window, window, bands, 1))
    patches += sigs[labels][:, None, None, :, None]
    origins = np.stack([np.arange(n, dtype=np.int64),
                        np.zeros(n, dtype=np.int64)], axis=1)
    return PatchSet(patches=patches.astype(np.float32), labels=labels,
                    origins=origins, window=window)
