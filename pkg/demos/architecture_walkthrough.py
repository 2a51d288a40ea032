"""Walk through the classifier's layer stack and where its parameters live.

Run me from the repository root:  python3 demos/architecture_walkthrough.py
"""

import numpy as np

from hsinet import model

# The network consumes an S x S x B patch of a PCA-reduced scene as a
# single-channel 3D volume. Three valid 3D convolutions shrink the two
# spatial axes by 2 each and the spectral axis by 6, 4, 2; the surviving
# spectral slices are then folded into channels so one 2D convolution can
# mix everything spatially before the dense stack.
cfg = model.ModelConfig(window=25, bands=30, classes=16)

print("per-layer summary for a 25 x 25 x 30 patch and 16 classes")
print(f"{'layer':<10} {'output shape':<18} params")
total = 0
for name, shape, count in model.summary_rows(cfg):
    print(f"{name:<10} {str(shape):<18} {count}")
    total += count
print(f"{'':<10} {'':<18} {total} total\n")

# Parameter counts follow directly from the kernel geometry. The first
# convolution owns 8 kernels of 3 x 3 x 7 on one input channel plus a bias
# per kernel, and every later layer repeats the same arithmetic.
print("conv3d_1 by hand:", 8 * (3 * 3 * 7 * 1) + 8)
print("dense_1 by hand: ", 18496 * 256 + 256, "\n")

# The final dense layer is the only place the class count enters, so the
# total parameter count moves by 129 weights for every class added
# (128 weights + 1 bias).
for classes in (9, 16):
    cfg_c = model.ModelConfig(window=25, bands=30, classes=classes)
    print(f"classes={classes:<3} total parameters {model.model_param_count(cfg_c)}")
print()

# The two reduced variants of the architecture: "3d" stops after the third
# 3D convolution and goes straight to the dense stack; "2d" folds the
# spectral axis into input channels and uses only the 2D convolution.
for variant in ("hybrid", "3d", "2d"):
    cfg_v = model.ModelConfig(window=19, bands=30, classes=16, variant=variant)
    print(f"variant={variant:<7} total parameters {model.model_param_count(cfg_v)}")
print()

# build_model draws the actual weights (Glorot-uniform, one seeded
# generator, biases zero) so two builds with the same seed are identical.
m1 = model.build_model(model.ModelConfig(window=9, bands=13, classes=4, seed=5))
m2 = model.build_model(model.ModelConfig(window=9, bands=13, classes=4, seed=5))
names = [name for name, _ in m1.parameters()]
same = all(np.array_equal(a[1], b[1])
           for a, b in zip(m1.parameters(), m2.parameters()))
print(f"{len(names)} parameter tensors: {', '.join(names[:4])}, ...")
print("two builds with seed 5 are bitwise identical:", same)
