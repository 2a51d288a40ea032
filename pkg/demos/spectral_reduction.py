"""What PCA does to a hyperspectral cube before the classifier sees it.

Hyperspectral bands are strongly correlated, so most of the spectral
variance lives in a handful of directions. This script builds a synthetic
cube whose 24 bands are mixtures of 3 latent signals, reduces it, and
shows where the variance went.

Run me from the repository root:  python3 demos/spectral_reduction.py
"""

import numpy as np

from hsinet import pipeline, synthetic

cube = synthetic.synthetic_scene(rows=40, cols=40, depth=24, classes=4, seed=9)
print(f"scene: {cube.height} x {cube.width} pixels, {cube.depth} bands, "
      f"{cube.n_classes} classes\n")

reduced = pipeline.pca_reduce(cube, 8, whiten=False)

# Eigenvalues are the per-component variances, sorted descending. The
# cumulative share tells how much of the total spectral variance the kept
# components explain.
total_var = np.trace(np.cov(cube.values.reshape(-1, 24).astype(np.float64),
                            rowvar=False))
share = np.cumsum(reduced.eigenvalues) / total_var
print("component  eigenvalue   cumulative share")
for k in range(8):
    print(f"{k + 1:>9}  {reduced.eigenvalues[k]:>10.4f}   {share[k]:.4f}")
print()

# The projection rows are orthonormal: projecting and un-projecting with
# the same components loses only what lives outside the kept subspace.
gram = reduced.components @ reduced.components.T
print("components @ components.T == identity:",
      bool(np.allclose(gram, np.eye(8), atol=1e-10)))

flat = cube.values.reshape(-1, 24).astype(np.float64) - reduced.mean
recon = reduced.values.reshape(-1, 8).astype(np.float64) @ reduced.components
residual = np.linalg.norm(flat - recon) / np.linalg.norm(flat)
print(f"relative residual after keeping 8 of 24 bands: {residual:.6f}\n")

# Whitening rescales each kept coordinate to unit variance, which evens
# out the magnitudes the network's first layer sees.
white = pipeline.pca_reduce(cube, 8, whiten=True)
variances = white.values.reshape(-1, 8).astype(np.float64).var(axis=0, ddof=1)
print("whitened per-band variances:",
      np.array2string(variances, precision=3))

# The classifier never sees the raw cube: patches are cut from this
# reduced volume, so its input depth is B = 8 here, not D = 24.
patches = pipeline.extract_patches(reduced, cube.labels, 9)
print("patch tensor from the reduced cube:", patches.patches.shape)
